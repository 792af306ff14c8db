#include "medprompt/runtime/benchmark.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>

namespace medprompt {

using nlohmann::json;

namespace {

BenchmarkRun run_one(const EvolutionContext& ctx, EvolutionConfig cfg, std::uint64_t seed,
                     Variant variant) {
    cfg.seed = seed;
    const RunResult result = run_evolution(ctx, cfg, {}, std::nullopt, variant);
    BenchmarkRun run;
    run.seed = seed;
    for (const auto& s : result.history) {
        run.best_f_curve.push_back(s.best_f);
        if (s.stopped_early)
            run.early_stop_generation = s.generation;
    }
    run.final_best_f = run.best_f_curve.empty() ? 0.0 : run.best_f_curve.back();
    const double target = 0.95 * run.final_best_f;
    run.generations_to_95 = run.best_f_curve.size();
    for (std::size_t g = 0; g < run.best_f_curve.size(); ++g) {
        if (run.best_f_curve[g] >= target) {
            run.generations_to_95 = g;
            break;
        }
    }
    return run;
}

double median(std::vector<double> values) {
    if (values.empty())
        return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

VariantReport run_variant(const EvolutionContext& ctx, const EvolutionConfig& cfg,
                          const std::vector<std::uint64_t>& seeds, Variant variant,
                          std::string name) {
    VariantReport report;
    report.name = std::move(name);
    std::vector<double> to95;
    for (std::uint64_t seed : seeds) {
        report.runs.push_back(run_one(ctx, cfg, seed, variant));
        to95.push_back(static_cast<double>(report.runs.back().generations_to_95));
    }
    report.median_generations_to_95 = median(std::move(to95));
    return report;
}

json variant_to_json(const VariantReport& v) {
    json runs = json::array();
    for (const auto& r : v.runs) {
        json run;
        run["seed"] = r.seed;
        run["best_f_curve"] = r.best_f_curve;
        if (r.early_stop_generation)
            run["early_stop_generation"] = *r.early_stop_generation;
        else
            run["early_stop_generation"] = nullptr;
        run["generations_to_95"] = r.generations_to_95;
        run["final_best_f"] = r.final_best_f;
        runs.push_back(std::move(run));
    }
    return json{{"name", v.name},
                {"runs", std::move(runs)},
                {"median_generations_to_95", v.median_generations_to_95}};
}

} // namespace

std::string BenchmarkReport::to_json() const {
    json doc;
    doc["variants"] = {variant_to_json(structure_aware), variant_to_json(generic)};
    return doc.dump(2);
}

std::string BenchmarkReport::curves_csv() const {
    std::string out = "variant,seed,g,best_F\n";
    auto append = [&out](const VariantReport& v) {
        for (const auto& run : v.runs) {
            for (std::size_t g = 0; g < run.best_f_curve.size(); ++g) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), "%s,%llu,%zu,%.9g\n", v.name.c_str(),
                              static_cast<unsigned long long>(run.seed), g,
                              run.best_f_curve[g]);
                out += buf;
            }
        }
    };
    append(structure_aware);
    append(generic);
    return out;
}

BenchmarkReport benchmark_compare(const EvolutionContext& ctx, const EvolutionConfig& cfg,
                                  const std::vector<std::uint64_t>& seeds) {
    BenchmarkReport report;
    report.structure_aware =
        run_variant(ctx, cfg, seeds, Variant::structure_aware, "structure_aware");
    report.generic = run_variant(ctx, cfg, seeds, Variant::generic, "generic");
    return report;
}

} // namespace medprompt
