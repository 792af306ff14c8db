#include "medprompt/embedding.hpp"

#include "medprompt/errors.hpp"

#include <cmath>

namespace medprompt {

namespace {

constexpr int kProbes = 8;

// splitmix64 finalizer; decorrelates consecutive hash inputs.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

void l2_normalize(std::vector<double>& v) {
    double ss = 0.0;
    for (double x : v)
        ss += x * x;
    if (ss <= 0.0)
        return; // zero vector stays zero
    const double inv = 1.0 / std::sqrt(ss);
    for (double& x : v)
        x *= inv;
}

} // namespace

OfflineHashProvider::OfflineHashProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
    if (dim_ == 0)
        throw ValidationError("embedding dimension must be positive");
}

std::vector<double> OfflineHashProvider::token_vector(std::string_view token) const {
    std::vector<double> v(dim_, 0.0);
    const std::uint64_t base = mix(seed_ ^ fnv1a64(token));
    for (int p = 0; p < kProbes; ++p) {
        const std::uint64_t h = mix(base + static_cast<std::uint64_t>(p));
        const std::size_t bucket = static_cast<std::size_t>(h % dim_);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        v[bucket] += sign;
    }
    l2_normalize(v);
    if ([&] {
            for (double x : v)
                if (x != 0.0)
                    return false;
            return true;
        }()) {
        // All probes cancelled (vanishingly rare); fall back to one bucket.
        v[static_cast<std::size_t>(base % dim_)] = 1.0;
    }
    return v;
}

EmbeddingResult OfflineHashProvider::embed(std::string_view text) const {
    if (trim(text).empty())
        throw ValidationError("embed: text must be nonempty");
    EmbeddingResult out;
    out.tokens = tokenize(text);
    const std::size_t n = out.tokens.size();
    out.matrix.rows = n;
    out.matrix.dim = dim_;
    out.matrix.data.assign(n * dim_, 0.0);
    out.cls.assign(dim_, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Token& t = out.tokens[i];
        // Hash the normalized form so surface punctuation does not perturb
        // the vector; punctuation-only tokens hash their raw bytes.
        std::vector<double> v = token_vector(t.norm.empty() ? t.raw : t.norm);
        for (std::size_t j = 0; j < dim_; ++j) {
            out.matrix.row(i)[j] = v[j];
            out.cls[j] += v[j];
        }
    }
    if (n > 0)
        for (double& x : out.cls)
            x /= static_cast<double>(n);
    l2_normalize(out.cls);
    return out;
}

double clamped_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ValidationError("cosine: dimension mismatch");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0)
        return 0.0;
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    if (c < 0.0)
        c = 0.0;
    if (c > 1.0)
        c = 1.0;
    return c;
}

} // namespace medprompt
