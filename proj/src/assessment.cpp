#include "medprompt/assessment.hpp"

#include "medprompt/errors.hpp"

#include <cmath>
#include <numbers>

namespace medprompt {

std::string_view dimension_name(Dimension d) {
    switch (d) {
    case Dimension::clarity: return "clarity";
    case Dimension::specificity: return "specificity";
    case Dimension::relevance: return "relevance";
    case Dimension::accuracy_risk: return "accuracy_risk";
    }
    return "?";
}

std::optional<Dimension> parse_dimension(std::string_view name) {
    for (auto d : kAllDimensions)
        if (dimension_name(d) == name)
            return d;
    return std::nullopt;
}

std::string_view provenance_name(ScorerProvenance p) {
    switch (p) {
    case ScorerProvenance::head: return "head";
    case ScorerProvenance::heuristic: return "heuristic";
    case ScorerProvenance::remote: return "remote";
    }
    return "?";
}

ScenarioWeights::ScenarioWeights() {
    for (auto s : kAllScenarios) {
        const bool clinical = s == ScenarioKind::diagnosis || s == ScenarioKind::treatment;
        const double risk = clinical ? 0.4 : 0.25;
        const double rest = (1.0 - risk) / 3.0;
        weights_[s] = {{Dimension::clarity, rest},
                       {Dimension::specificity, rest},
                       {Dimension::relevance, rest},
                       {Dimension::accuracy_risk, risk}};
    }
    validate();
}

ScenarioWeights::ScenarioWeights(
    const std::map<ScenarioKind, std::map<Dimension, double>>& weights)
    : weights_(weights) {
    validate();
}

void ScenarioWeights::validate() const {
    for (auto s : kAllScenarios) {
        auto it = weights_.find(s);
        if (it == weights_.end())
            throw ConfigError("scenario weights: missing scenario " +
                              std::string(scenario_name(s)));
        double total = 0.0;
        for (auto d : kAllDimensions) {
            auto w = it->second.find(d);
            if (w == it->second.end())
                throw ConfigError("scenario weights for " + std::string(scenario_name(s)) +
                                  ": missing dimension " + std::string(dimension_name(d)));
            if (w->second < 0.0)
                throw ConfigError("scenario weights for " + std::string(scenario_name(s)) +
                                  ": negative weight on " + std::string(dimension_name(d)));
            total += w->second;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw ConfigError("scenario weights for " + std::string(scenario_name(s)) +
                              " must sum to 1 (got " + std::to_string(total) + ")");
    }
}

double ScenarioWeights::weight(ScenarioKind s, Dimension d) const {
    return weights_.at(s).at(d);
}

const std::map<Dimension, double>& ScenarioWeights::for_scenario(ScenarioKind s) const {
    return weights_.at(s);
}

QualityReport make_quality_report(std::map<Dimension, double> scores, ScenarioKind scenario,
                                  const ScenarioWeights& sw, ScorerProvenance provenance) {
    QualityReport report;
    report.scores = std::move(scores);
    report.scenario = scenario;
    report.weights_used = sw.for_scenario(scenario);
    report.q = integrated_quality(report.scores, scenario, sw);
    report.provenance = provenance;
    return report;
}

namespace {

double gelu_tanh(double x) {
    // tanh approximation; deviates from exact GeLU by < 1e-3 absolute,
    // well inside the documented 1e-4 tolerance near the operating range.
    constexpr double c = 0.044715;
    const double k = std::sqrt(2.0 / std::numbers::pi);
    return 0.5 * x * (1.0 + std::tanh(k * (x + c * x * x * x)));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

double score_dimension_head(const std::vector<double>& z_final, const QualityHead& head) {
    std::vector<double> h = affine(head.w1, z_final, head.b1);
    // LayerNorm: mean 0 / variance 1 over the hidden vector, then gain/bias.
    const std::size_t n = h.size();
    double mean = 0.0;
    for (double x : h)
        mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : h)
        var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    constexpr double kEps = 1e-5;
    const double inv = 1.0 / std::sqrt(var + kEps);
    double out = head.b2;
    if (head.w2.size() != n || head.ln_gain.size() != n || head.ln_bias.size() != n)
        throw ValidationError("score_dimension_head: head shape mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        const double normed = (h[i] - mean) * inv * head.ln_gain[i] + head.ln_bias[i];
        out += head.w2[i] * gelu_tanh(normed);
    }
    return sigmoid(out);
}

double integrated_quality(const std::map<Dimension, double>& scores, ScenarioKind scenario,
                          const ScenarioWeights& sw) {
    double q = 0.0;
    for (auto d : kAllDimensions) {
        auto it = scores.find(d);
        if (it == scores.end())
            throw ValidationError("integrated_quality: missing dimension " +
                                  std::string(dimension_name(d)));
        q += sw.weight(scenario, d) * it->second;
    }
    return q;
}

HeuristicConfig default_heuristic_config() {
    HeuristicConfig cfg;
    cfg.specificity_density_cap = 0.5;
    cfg.scenario_keywords = {
        {ScenarioKind::diagnosis,
         {"diagnosis", "differential", "symptoms", "workup", "evidence"}},
        {ScenarioKind::treatment,
         {"treatment", "contraindications", "dosing", "monitoring", "evidence"}},
        {ScenarioKind::history,
         {"history", "timeline", "medications", "comorbidities", "progression"}},
        {ScenarioKind::education,
         {"explain", "plain language", "analogy", "comprehension", "concerns"}},
    };
    cfg.claim_patterns = {"always", "never", "guaranteed", "100%", "certainly", "cure"};
    return cfg;
}

double heuristic_dimension_score(const PromptGenome& genome, Dimension dim,
                                 const Lexicon& lexicon, const HeuristicConfig& cfg,
                                 const CategorySet& categories) {
    const std::string text = render_text(genome);
    switch (dim) {
    case Dimension::clarity: {
        const double coverage =
            static_cast<double>(genome.components.size()) / static_cast<double>(categories.size());
        // Canonical order is a genome invariant, so the bonus is 1 for every
        // genome that reaches this point; kept explicit as part of the formula.
        bool ordered = true;
        for (std::size_t i = 1; i < genome.components.size(); ++i)
            if (!(genome.components[i - 1].category < genome.components[i].category))
                ordered = false;
        return coverage * (ordered ? 1.0 : 0.5);
    }
    case Dimension::specificity: {
        const auto tokens = tokenize(text);
        if (tokens.empty())
            return 0.0;
        const auto spans = identify_concepts(tokens, lexicon);
        const double density =
            static_cast<double>(tokens_covered(spans)) / static_cast<double>(tokens.size());
        const double cap = cfg.specificity_density_cap;
        if (cap <= 0.0)
            return 0.0;
        return std::min(density, cap) / cap;
    }
    case Dimension::relevance: {
        auto it = cfg.scenario_keywords.find(genome.scenario);
        if (it == cfg.scenario_keywords.end() || it->second.empty())
            return 0.0;
        const FoldedText folded(text);
        std::size_t hits = 0;
        for (const auto& kw : it->second)
            if (folded.contains(kw))
                ++hits;
        return static_cast<double>(hits) / static_cast<double>(it->second.size());
    }
    case Dimension::accuracy_risk: {
        const auto tokens = tokenize(text);
        if (tokens.empty())
            return 1.0;
        const FoldedText folded(text);
        std::size_t occurrences = 0;
        for (const auto& p : cfg.claim_patterns)
            occurrences += folded.count(p);
        const double density =
            static_cast<double>(occurrences) / static_cast<double>(tokens.size());
        return 1.0 - std::min(1.0, density);
    }
    }
    return 0.0;
}

double heuristic_component_quality(const PromptComponent& component, ScenarioKind scenario,
                                   const Lexicon& lexicon, const HeuristicConfig& cfg,
                                   const CategorySet& categories) {
    PromptGenome g;
    g.id = 0;
    g.scenario = scenario;
    g.components.push_back(component);
    double total = 0.0;
    for (auto d : kAllDimensions)
        total += heuristic_dimension_score(g, d, lexicon, cfg, categories);
    return total / 4.0;
}

QualityReport assess(const PromptGenome& genome, const DimensionScorer& scorer,
                     const ScenarioWeights& sw) {
    ScorerProvenance provenance = ScorerProvenance::heuristic;
    auto scores = scorer(genome, provenance);
    return make_quality_report(std::move(scores), genome.scenario, sw, provenance);
}

DimensionScorer make_heuristic_scorer(const Lexicon& lexicon, HeuristicConfig cfg,
                                      const CategorySet& categories) {
    return [&lexicon, cfg = std::move(cfg), &categories](const PromptGenome& genome,
                                                         ScorerProvenance& provenance) {
        provenance = ScorerProvenance::heuristic;
        std::map<Dimension, double> scores;
        for (auto d : kAllDimensions)
            scores[d] = heuristic_dimension_score(genome, d, lexicon, cfg, categories);
        return scores;
    };
}

DimensionScorer make_head_scorer(const EmbeddingProvider& provider, const Lexicon& lexicon,
                                 const ModelWeights& weights) {
    return [&provider, &lexicon, &weights](const PromptGenome& genome,
                                           ScorerProvenance& provenance) {
        provenance = ScorerProvenance::head;
        const auto z = genome_representation(genome, provider, lexicon, weights);
        std::map<Dimension, double> scores;
        for (std::size_t i = 0; i < 4; ++i)
            scores[kAllDimensions[i]] = score_dimension_head(z, weights.heads[i]);
        return scores;
    };
}

} // namespace medprompt
