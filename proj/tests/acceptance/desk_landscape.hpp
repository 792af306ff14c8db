#pragma once

// Desk-scale optimization landscape: 5 categories x 6 templates = 7776
// assemblable genomes over the deterministic heuristic scorer, small enough
// for exhaustive enumeration yet structured enough that the optimum requires
// combining the strongest options.

#include "medprompt/assessment.hpp"
#include "medprompt/evolution.hpp"
#include "medprompt/verification.hpp"

#include <memory>
#include <vector>

namespace medprompt::desk {

struct DeskFixture {
    TemplateLibrary library;
    Lexicon lexicon;
    HeuristicConfig heuristic;
    ScenarioWeights scenario_weights;
    TerminologyConfig terminology;
    ReasoningConfig reasoning;
    BoundaryRuleSet boundary_rules;
    VerificationWeights verification_weights;
    EvolutionContext ctx;

    DeskFixture();
    DeskFixture(const DeskFixture&) = delete;

    /// Q, V, F for a genome, composed exactly as the evolutionary loop does.
    double fitness(const PromptGenome& genome) const;
};

/// All 6^5 template-choice combinations, assembled and scored.
/// Returns the global optimum fitness.
double enumerate_optimum(const DeskFixture& fixture);

} // namespace medprompt::desk
