#pragma once

#include "medprompt/genome.hpp"
#include "medprompt/lexicon.hpp"
#include "medprompt/representation.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medprompt {

/// The four quality dimensions. accuracy_risk is scored so that higher
/// means lower risk.
enum class Dimension { clarity, specificity, relevance, accuracy_risk };

inline constexpr Dimension kAllDimensions[] = {Dimension::clarity, Dimension::specificity,
                                               Dimension::relevance, Dimension::accuracy_risk};

std::string_view dimension_name(Dimension d);
std::optional<Dimension> parse_dimension(std::string_view name);

/// Per-scenario importance weights over the four dimensions; each scenario's
/// weights are nonnegative and sum to 1 within 1e-9.
class ScenarioWeights {
  public:
    ScenarioWeights(); // defaults: accuracy_risk 0.4 for diagnosis/treatment,
                       // 0.25 elsewhere, remainder split evenly
    explicit ScenarioWeights(
        const std::map<ScenarioKind, std::map<Dimension, double>>& weights);

    double weight(ScenarioKind s, Dimension d) const;
    const std::map<Dimension, double>& for_scenario(ScenarioKind s) const;

  private:
    std::map<ScenarioKind, std::map<Dimension, double>> weights_;
    void validate() const;
};

enum class ScorerProvenance { head, heuristic, remote };

std::string_view provenance_name(ScorerProvenance p);

/// Quality assessment result. Q always equals the scenario-weighted sum of
/// the recorded dimension scores (checked at construction).
struct QualityReport {
    std::map<Dimension, double> scores;
    std::map<Dimension, double> weights_used;
    ScenarioKind scenario = ScenarioKind::diagnosis;
    double q = 0.0;
    ScorerProvenance provenance = ScorerProvenance::heuristic;
};

/// Build a report, computing Q and validating internal consistency.
QualityReport make_quality_report(std::map<Dimension, double> scores, ScenarioKind scenario,
                                  const ScenarioWeights& sw, ScorerProvenance provenance);

/// sigmoid(w2 . gelu(layernorm(w1 z + b1)) + b2). LayerNorm normalizes to
/// mean 0 / variance 1 (epsilon 1e-5) then applies gain and bias; GeLU uses
/// the tanh approximation 0.5x(1 + tanh(sqrt(2/pi)(x + 0.044715 x^3))).
double score_dimension_head(const std::vector<double>& z_final, const QualityHead& head);

/// Q = sum_c w_c(scenario) * score_c. Throws on a missing dimension.
double integrated_quality(const std::map<Dimension, double>& scores, ScenarioKind scenario,
                          const ScenarioWeights& sw);

/// Knobs of the deterministic offline scorer. All defaults documented in the
/// README; frozen by golden tests.
struct HeuristicConfig {
    double specificity_density_cap = 0.5;
    std::map<ScenarioKind, std::vector<std::string>> scenario_keywords;
    std::vector<std::string> claim_patterns;
};

HeuristicConfig default_heuristic_config();

/// Deterministic bounded per-dimension features:
///   clarity       coverage of the category set times the canonical-order bonus
///                 (bonus is 1 for valid genomes, 0.5 otherwise)
///   specificity   min(matched-lexicon-token density, cap) / cap
///   relevance     fraction of the scenario keyword list present in the text
///   accuracy_risk 1 - min(1, claim-pattern occurrences / token count)
double heuristic_dimension_score(const PromptGenome& genome, Dimension dim,
                                 const Lexicon& lexicon, const HeuristicConfig& cfg,
                                 const CategorySet& categories);

/// Heuristic quality of a single component: the per-dimension scorer applied
/// to a one-component genome, averaged over dimensions.
double heuristic_component_quality(const PromptComponent& component, ScenarioKind scenario,
                                   const Lexicon& lexicon, const HeuristicConfig& cfg,
                                   const CategorySet& categories);

/// Scorer backend interface used by assess(); returns the four dimension
/// scores for a genome.
using DimensionScorer =
    std::function<std::map<Dimension, double>(const PromptGenome&, ScorerProvenance&)>;

/// Score a genome with the selected backend and integrate per the scenario
/// weights. The backend reports its own provenance (a remote scorer that fell
/// back to the heuristic reports heuristic).
QualityReport assess(const PromptGenome& genome, const DimensionScorer& scorer,
                     const ScenarioWeights& sw);

/// Ready-made backends.
DimensionScorer make_heuristic_scorer(const Lexicon& lexicon, HeuristicConfig cfg,
                                      const CategorySet& categories);
DimensionScorer make_head_scorer(const EmbeddingProvider& provider, const Lexicon& lexicon,
                                 const ModelWeights& weights);

} // namespace medprompt
