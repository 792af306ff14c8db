#pragma once

#include "medprompt/evolution.hpp"

#include <optional>
#include <string>
#include <vector>

namespace medprompt {

struct BenchmarkRun {
    std::uint64_t seed = 0;
    std::vector<double> best_f_curve; // one entry per evaluated generation
    std::optional<std::size_t> early_stop_generation;
    std::size_t generations_to_95 = 0; // first g with best_F >= 0.95 * final best_F
    double final_best_f = 0.0;
};

struct VariantReport {
    std::string name;
    std::vector<BenchmarkRun> runs;
    double median_generations_to_95 = 0.0;
};

struct BenchmarkReport {
    VariantReport structure_aware;
    VariantReport generic;

    std::string to_json() const;
    /// variant,seed,g,best_F rows for every run.
    std::string curves_csv() const;
};

/// Run both variants over the given seeds with otherwise identical
/// configuration and contexts (offline backends assumed for reproducibility).
BenchmarkReport benchmark_compare(const EvolutionContext& ctx, const EvolutionConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds);

} // namespace medprompt
