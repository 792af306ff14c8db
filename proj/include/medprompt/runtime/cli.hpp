#pragma once

#include "medprompt/runtime/config.hpp"
#include "medprompt/runtime/remote.hpp"

#include <chrono>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace medprompt {

/// Everything a run needs, assembled from a RunConfig: loaded data files,
/// provider, scorer and verifier callables, and a wired EvolutionContext.
/// The context borrows from the owned objects, so keep the pipeline alive
/// for as long as the context is used.
struct ScoringPipeline {
    std::shared_ptr<CategorySet> categories;
    std::shared_ptr<TemplateLibrary> library;
    std::shared_ptr<Lexicon> lexicon;
    std::shared_ptr<std::vector<GuidelineStatement>> guidelines;
    std::shared_ptr<ModelWeights> weights; // null unless the head scorer is selected
    std::shared_ptr<EmbeddingProvider> provider;
    std::shared_ptr<RemoteScorer> remote;  // null for offline
    ScenarioWeights scenario_weights;
    std::string risk_category;
    EvolutionContext context;
};

/// Build the scoring pipeline. `transport` and `sleeper` are injectable for
/// tests; the default transport is real HTTP. `on_note` receives remote
/// fallback notices.
ScoringPipeline build_pipeline(const RunConfig& cfg,
                               std::unique_ptr<Transport> transport = nullptr,
                               std::function<void(std::chrono::milliseconds)> sleeper = {},
                               std::function<void(const std::string&)> on_note = {});

std::string quality_report_json(const QualityReport& report);
std::string verification_report_json(const VerificationReport& report,
                                     const CategorySet& categories);

/// The batch CLI. Subcommands: optimize, evaluate, verify, benchmark,
/// inspect. Returns the process exit code: 0 success, 2 usage error,
/// 1 any other failure (with a machine-parsable JSON error on `err`).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace medprompt
