#pragma once

#include "medprompt/embedding.hpp"
#include "medprompt/genome.hpp"
#include "medprompt/lexicon.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace medprompt {

/// One statement from the guideline file, with its evidence-quality weight.
struct GuidelineStatement {
    std::string id;
    std::string text;
    double evidence_weight = 1.0; // in (0, 1]
};

std::vector<GuidelineStatement> parse_guidelines(std::string_view bytes);

/// Liability rule: a pattern that must not appear (forbidden) or must
/// appear (required) in the rendered prompt.
struct LiabilityRule {
    std::string pattern;
    bool forbidden = true;

    bool operator==(const LiabilityRule&) const = default;
};

/// Boundary-check configuration: disclaimer presence patterns, per-risk
///-category required elements, liability rules and the three weights
/// (alpha1 + alpha2 + alpha3 = 1).
struct BoundaryRuleSet {
    std::vector<std::string> presence_patterns;
    std::map<std::string, std::vector<std::string>> risk_categories;
    std::vector<LiabilityRule> liability_rules;
    double alpha_presence = 0.4;
    double alpha_completeness = 0.4;
    double alpha_accuracy = 0.2;

    void validate() const; // throws ConfigError
};

BoundaryRuleSet default_boundary_rules();

/// Weights of the four verification sub-scores (sum to 1 within 1e-9).
struct VerificationWeights {
    double terminology = 0.3;
    double reasoning = 0.25;
    double guideline = 0.25;
    double boundary = 0.2;

    void validate() const; // throws ConfigError
};

/// Terminology-check configuration: the UMLS/context mixing weights and the
/// heuristic for candidate terms outside the lexicon (capitalized tokens
/// carrying a configured medical suffix).
struct TerminologyConfig {
    double w_umls = 0.7;
    double w_context = 0.3;
    std::vector<std::string> medical_suffixes;
    std::size_t context_window = 5;

    void validate() const;
};

TerminologyConfig default_terminology_config();

/// Clinical-stage keyword lists, index = stage in the canonical clinical
/// order: presentation, differential, evidence/workup, recommendation,
/// boundary.
struct ReasoningConfig {
    std::vector<std::vector<std::string>> stage_keywords;
};

ReasoningConfig default_reasoning_config();

/// Sentence cues marking a recommendation for the guideline check.
struct GuidelineConfig {
    std::vector<std::string> recommendation_cues;
};

GuidelineConfig default_guideline_config();

/// Evidence attached to the terminology score.
struct TermEvidence {
    std::string term;
    std::string concept_id; // empty when unmapped
    bool mapped = false;
    double context = 1.0;

    bool operator==(const TermEvidence&) const = default;
};

/// One extracted reasoning step.
struct ChainStep {
    Category category;
    std::string marker;              // the cue or keyword that opened the step
    std::optional<int> stage;        // canonical clinical stage, if keyword-tagged
    std::optional<int> enumeration;  // absolute ordinal, if numbered/ordinal cue

    bool operator==(const ChainStep&) const = default;
};

struct GuidelineMatch {
    std::string recommendation;
    std::string guideline_id; // empty when no guidelines configured
    double weighted_similarity = 0.0;

    bool operator==(const GuidelineMatch&) const = default;
};

struct BoundaryEvidence {
    std::vector<std::string> matched_presence_patterns;
    std::vector<std::string> addressed_elements;
    std::vector<std::string> violated_rules;
    double presence = 0.0;
    double completeness = 0.0;
    double accuracy = 0.0;

    bool operator==(const BoundaryEvidence&) const = default;
};

/// Integrated verification result.
struct VerificationReport {
    double v_term = 0.0;
    double v_logic = 0.0;
    double v_guideline = 0.0;
    double v_boundary = 0.0;
    double v_total = 0.0;
    double tau = 0.75;
    bool pass = false;
    VerificationWeights weights;
    std::vector<TermEvidence> term_evidence;
    std::vector<ChainStep> chain;
    std::vector<GuidelineMatch> guideline_matches;
    BoundaryEvidence boundary_evidence;
    std::vector<std::string> notes; // vacuous-truth flags, neutral-score warnings
};

/// Eq.-style terminology verification over candidate medical terms: lexicon
/// spans plus capitalized suffix-bearing tokens. Empty candidate set scores
/// 1.0 and is flagged as vacuous in the notes.
std::pair<double, std::vector<TermEvidence>> verify_terminology(
    const PromptGenome& genome, const Lexicon& lexicon, const TerminologyConfig& cfg,
    std::vector<std::string>* notes = nullptr);

/// Extract the ordered reasoning chain from all components: enumeration cues
/// ("(1)", "1.", "first", "then", "finally") open steps; clinical-stage
/// keywords tag the current step or open a new one when the current step is
/// already tagged.
std::vector<ChainStep> extract_reasoning_chain(const PromptGenome& genome,
                                               const ReasoningConfig& cfg);

/// Fraction of adjacent step pairs consistent with the canonical clinical
/// order. Pairs with comparable stages must be nondecreasing; otherwise pairs
/// with absolute enumeration ordinals must be nondecreasing; incomparable
/// pairs count as consistent. Empty or singleton chain scores 0.5.
double score_reasoning_coherence(const std::vector<ChainStep>& chain);

/// Mean over recommendation sentences of the best weighted guideline
/// similarity. No recommendation sentences -> 1.0 (vacuous, flagged);
/// empty guideline set -> 0.5 (neutral, flagged).
std::pair<double, std::vector<GuidelineMatch>> verify_guidelines(
    const PromptGenome& genome, const std::vector<GuidelineStatement>& guidelines,
    const EmbeddingProvider& provider, const GuidelineConfig& cfg,
    std::vector<std::string>* notes = nullptr);

/// Boundary statement verification: presence / completeness / accuracy,
/// combined with the alpha weights. Throws ValidationError on an unknown
/// risk category.
std::pair<double, BoundaryEvidence> verify_boundaries(const PromptGenome& genome,
                                                      const BoundaryRuleSet& rules,
                                                      const std::string& risk_category);

/// Combine the four sub-scores: v_total = beta . subscores, pass = v_total >= tau.
VerificationReport integrated_verification(double v_term, double v_logic, double v_guideline,
                                           double v_boundary, const VerificationWeights& vw,
                                           double tau);

} // namespace medprompt
