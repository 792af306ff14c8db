#pragma once

#include "medprompt/assessment.hpp"
#include "medprompt/genome.hpp"
#include "medprompt/lexicon.hpp"
#include "medprompt/rng.hpp"
#include "medprompt/verification.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medprompt {

/// Every hyperparameter of the evolutionary loop.
struct EvolutionConfig {
    std::size_t population_size = 100;          // N
    std::size_t max_generations = 50;           // G_max
    std::size_t tournament_size = 5;            // k
    double selection_probability = 0.8;         // p_sel
    double initial_mutation_probability = 0.3;  // p_m0
    double mutation_decay = 0.98;               // gamma
    double quality_exponent = 1.0;              // exponent on (1 - q)
    double adaptation_rate = 0.1;               // diversity adaptation rate
    double mutation_probability_min = 0.01;
    double mutation_probability_max = 0.8;
    double crossover_threshold = 0.05;          // delta
    double p_synonym = 0.4;
    double p_elaborate = 0.2;
    double p_simplify = 0.2;
    double p_replace = 0.2;
    double early_stop_threshold = 0.001;        // epsilon
    std::size_t early_stop_window = 5;
    double verification_threshold = 0.75;       // tau
    std::size_t elitism = 2;
    std::uint64_t seed = 1;

    void validate() const; // throws ConfigError
};

/// Scores of one evaluated genome. f always satisfies the constrained-fitness
/// identity given q, v and tau.
struct FitnessRecord {
    double q = 0.0;
    double v = 0.0;
    double f = 0.0;
    QualityReport quality;
    VerificationReport verification;
};

struct Member {
    PromptGenome genome;
    std::optional<FitnessRecord> fitness;
};

struct Population {
    std::size_t generation = 0;
    std::vector<Member> members;
    double mutation_probability = 0.3;
};

/// Per-generation summary row.
struct GenerationStats {
    std::size_t generation = 0;
    double best_f = 0.0;
    double mean_f = 0.0;
    double sigma_f = 0.0;
    double mutation_probability = 0.0;
    bool stopped_early = false;
    /// Count of components whose text changed while constructing this
    /// generation, keyed by category index.
    std::map<std::uint32_t, std::size_t> modifications;
    std::size_t replace_fallbacks = 0;
};

/// Category-keyed elaboration phrases plus filler phrases the Simplify
/// operator may drop.
struct MutationTexts {
    std::map<std::uint32_t, std::vector<std::string>> elaborations;
    std::vector<std::string> filler_phrases;
};

MutationTexts default_mutation_texts();

/// Everything the loop needs besides hyperparameters. Scorer callables must
/// be pure functions of the genome (results are cached by rendered text).
struct EvolutionContext {
    const TemplateLibrary* library = nullptr;
    const Lexicon* lexicon = nullptr;
    const CategorySet* categories = nullptr;
    ScenarioKind scenario = ScenarioKind::diagnosis;
    std::vector<Category> init_categories;                 // empty = every category
    std::map<std::string, std::string> slot_values;
    std::function<QualityReport(const PromptGenome&)> assess;
    std::function<VerificationReport(const PromptGenome&)> verify;
    std::function<double(const PromptComponent&)> component_quality;
    MutationTexts mutation_texts;
    std::string scorer_id = "heuristic";                   // cache key component
};

/// Generic baseline toggles: string-level crossover, uniform mutation
/// probability, no verification gate.
enum class Variant { structure_aware, generic };

/// Draw the initial population: one template per required category, chosen
/// with probability proportional to base_quality; slots filled from the
/// context's fixture values. Deterministic given the rng state.
Population init_population(const EvolutionContext& ctx, const EvolutionConfig& cfg, Rng& rng,
                           std::uint64_t& next_genome_id);

/// Tournament selection: sample k members without replacement, return the
/// argmax by fitness (ties to the lowest genome id) with probability p_sel,
/// otherwise a uniform sample member. Returns the member index.
std::size_t tournament_select(const std::vector<Member>& members, const EvolutionConfig& cfg,
                              Rng& rng);

/// Diversity-driven update of the generation-level base mutation rate.
/// Skips the update (returning the current value) when mean fitness is not
/// positive; `skipped` reports that case.
double adaptive_mutation_update(double current, const GenerationStats& stats,
                                const EvolutionConfig& cfg, bool* skipped = nullptr);

/// The pre-clamp damping factor gamma^g * (1-q)^beta.
double mutation_damping(std::size_t generation, double quality, const EvolutionConfig& cfg);

/// Per-component mutation probability: base * gamma^g * (1-q)^beta clamped to
/// the configured bounds. An exactly-zero raw value (q = 1 or base = 0) stays
/// zero instead of being lifted to the lower bound.
double component_mutation_probability(std::size_t generation, double quality, double base,
                                      const EvolutionConfig& cfg);

/// Merge two same-category components: the higher-quality one provides the
/// structural scaffold; the other parent's lexicon concepts that are missing
/// from the scaffold are appended as a comma-joined clause at the end of the
/// scaffold sentence containing the most concepts (or at the scaffold end when
/// no sentence holds a concept). Returns the scaffold verbatim when the other
/// parent adds no new concept. Quality = max of the two; origin = fusion.
PromptComponent semantic_fusion(const PromptComponent& a, const PromptComponent& b,
                                const Lexicon& lexicon);

/// Component-level recombination. For categories present in both parents,
/// one uniform draw r decides per the threshold/probability branches in
/// order (take A, take B, fuse); single-source categories are copied. Fused
/// components get their quality refreshed via ctx.component_quality.
PromptGenome crossover(const PromptGenome& a, double total_quality_a, const PromptGenome& b,
                       double total_quality_b, const EvolutionContext& ctx,
                       const EvolutionConfig& cfg, Rng& rng, std::uint64_t child_id);

/// Drop parenthetical segments holding no concept and configured filler
/// words, then verify against the lexicon that every previously matched
/// concept id survives; returns the original text when it would not.
std::string simplify_component_text(const std::string& text, const Lexicon& lexicon,
                                    const std::vector<std::string>& filler_phrases);

struct MutationOutcome {
    std::map<std::uint32_t, std::size_t> modifications;
    std::size_t replace_fallbacks = 0;
};

/// Controlled mutation. Each component draws once against its mutation
/// probability; mutating components apply Synonym / Elaborate / Simplify /
/// Replace per the configured operator probabilities. Changed components get
/// origin = mutation and a refreshed quality score. With `uniform` set the
/// per-component probability is exactly p_m_base (the generic baseline).
PromptGenome mutate(const PromptGenome& genome, std::size_t generation, double p_m_base,
                    const EvolutionContext& ctx, const EvolutionConfig& cfg, Rng& rng,
                    MutationOutcome* outcome = nullptr, bool uniform = false);

/// F = Q when V >= tau, else Q * V / tau.
double constrained_fitness(double q, double v, double tau);

/// True when the mean best-fitness improvement over the trailing window is
/// below the threshold. Needs window+1 recorded values.
bool should_stop_early(const std::vector<double>& best_history, const EvolutionConfig& cfg);

/// Checkpointable image of a run between generations (captured at the top of
/// the loop, before the pending generation is evaluated).
struct RunState {
    std::size_t generation = 0;
    double mutation_probability = 0.3;
    std::string rng_state;
    std::vector<Member> members; // fitness records informational; re-derived on resume
    std::vector<GenerationStats> stats;
    std::vector<double> best_history;
    std::uint64_t next_genome_id = 0;
    std::map<std::uint32_t, std::size_t> pending_modifications;
    std::size_t pending_replace_fallbacks = 0;
};

struct RunHooks {
    std::function<void(const GenerationStats&)> on_generation;
    std::function<void(const RunState&)> on_checkpoint;
    std::size_t checkpoint_every = 0; // generations between checkpoints; 0 = off
    /// Simulated crash: stop right after the checkpoint at the top of this
    /// generation, before it is evaluated.
    std::optional<std::size_t> interrupt_before_generation;
};

struct RunResult {
    PromptGenome best;
    FitnessRecord best_fitness;
    std::vector<GenerationStats> history;
    bool stopped_early = false;
    bool interrupted = false;
};

/// The full loop: evaluate (cached by rendered text), record stats, test the
/// early stop, then elitism + selection + crossover + mutation until N
/// children exist; the base mutation rate adapts once per generation.
/// Deterministic given (seed, config, context) with offline backends.
RunResult run_evolution(const EvolutionContext& ctx, const EvolutionConfig& cfg,
                        const RunHooks& hooks = {},
                        const std::optional<RunState>& resume = std::nullopt,
                        Variant variant = Variant::structure_aware);

} // namespace medprompt
