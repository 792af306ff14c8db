#pragma once

#include "medprompt/assessment.hpp"
#include "medprompt/evolution.hpp"
#include "medprompt/genome.hpp"
#include "medprompt/verification.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medprompt {

enum class BackendKind { offline, remote, remote_with_fallback };

std::string_view backend_name(BackendKind b);
std::optional<BackendKind> parse_backend(std::string_view name);

enum class OfflineScorerKind { heuristic, head };

/// Fully validated run configuration. Construction from a file validates
/// every nested invariant and records each applied default.
struct RunConfig {
    ScenarioKind scenario = ScenarioKind::diagnosis;

    std::string library_path;
    std::string lexicon_path;
    std::string guidelines_path; // optional; empty -> no guidelines (neutral)
    std::string weights_path;    // required when offline_scorer == head

    BackendKind backend = BackendKind::offline;
    OfflineScorerKind offline_scorer = OfflineScorerKind::heuristic;

    std::string remote_endpoint;
    std::size_t remote_timeout_ms = 5000;
    std::size_t remote_max_retries = 3;

    std::string output_dir = "out";

    EvolutionConfig evolution;
    ScenarioWeights scenario_weights;
    VerificationWeights verification_weights;
    TerminologyConfig terminology;
    BoundaryRuleSet boundary_rules;
    HeuristicConfig heuristic;
    ReasoningConfig reasoning;
    GuidelineConfig guideline;
    MutationTexts mutation_texts;

    std::string risk_category; // defaulted from the scenario
    std::vector<std::string> custom_categories;
    std::vector<std::string> init_categories; // empty -> all
    std::map<std::string, std::string> slot_values;
    std::size_t checkpoint_every = 0;
    std::uint64_t embedding_seed = 1337;
    std::size_t embedding_dim = 64;

    /// "key = value" lines for every default the loader applied.
    std::vector<std::string> applied_defaults;
};

/// Parse + validate a run config file. Unknown keys are rejected; all
/// validation failures are aggregated into a single ConfigError.
RunConfig load_run_config(const std::string& path);

/// Same, from bytes (for tests). `base_dir` resolves relative paths.
RunConfig parse_run_config(std::string_view bytes, const std::string& base_dir);

} // namespace medprompt
