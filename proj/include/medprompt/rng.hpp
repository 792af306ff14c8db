#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace medprompt {

/// Seeded random stream used by every stochastic operation.
///
/// All draws are derived from the raw mt19937_64 output with fixed arithmetic,
/// so a given seed produces the same sequence on every platform and standard
/// library. State round-trips through a string for checkpointing.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n). n must be > 0.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    /// k distinct indices from [0, n), order as drawn (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    /// Index drawn with probability proportional to weights[i].
    /// Zero-weight entries are never chosen; all-zero weights fall back to uniform.
    std::size_t pick_weighted(std::span<const double> weights);

    std::uint64_t next_u64() { return engine_(); }

    std::string state() const;
    void set_state(const std::string& s);

  private:
    std::mt19937_64 engine_;
};

} // namespace medprompt
