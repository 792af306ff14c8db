#pragma once

#include "medprompt/text.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace medprompt {

/// Dense row-major matrix, n rows of dimension d.
struct TokenMatrix {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<double> data;

    double* row(std::size_t i) { return data.data() + i * dim; }
    const double* row(std::size_t i) const { return data.data() + i * dim; }
};

/// Result of embedding a text: tokens, per-token matrix, and a pooled vector.
struct EmbeddingResult {
    std::vector<Token> tokens;
    TokenMatrix matrix;            // rows = tokens.size()
    std::vector<double> cls;       // pooled sequence vector, length = dim
};

/// Behavioral interface over the text encoder. Implementations must be safe
/// for concurrent embed() calls or document that they serialize.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;

    /// Embed a nonempty text. Throws ValidationError on empty input and
    /// BackendError when a remote backend is unreachable.
    virtual EmbeddingResult embed(std::string_view text) const = 0;

    virtual std::size_t dimension() const = 0;
    virtual std::string backend_kind() const = 0;
};

/// Deterministic offline encoder: each token's vector is a seeded feature
/// hash of its normalized form into `dim` buckets, L2-normalized; the pooled
/// vector is the L2-normalized mean of the token vectors. A pure function of
/// (seed, text); stateless and reentrant.
class OfflineHashProvider final : public EmbeddingProvider {
  public:
    OfflineHashProvider(std::size_t dim, std::uint64_t seed);

    EmbeddingResult embed(std::string_view text) const override;
    std::size_t dimension() const override { return dim_; }
    std::string backend_kind() const override { return "offline_hash"; }

    /// Vector for a single token string (exposed for tests).
    std::vector<double> token_vector(std::string_view token) const;

  private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// Cosine similarity clamped to [0, 1]. Zero vectors yield 0.
double clamped_cosine(const std::vector<double>& a, const std::vector<double>& b);

} // namespace medprompt
