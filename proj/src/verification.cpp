#include "medprompt/verification.hpp"

#include "medprompt/errors.hpp"
#include "medprompt/json_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace medprompt {

using nlohmann::json;

std::vector<GuidelineStatement> parse_guidelines(std::string_view bytes) {
    json doc = parse_json(bytes, "guidelines");
    if (!doc.is_array())
        throw ParseError("guidelines: expected a JSON array");
    std::vector<GuidelineStatement> out;
    std::vector<std::string> seen;
    for (const auto& item : doc) {
        GuidelineStatement g;
        g.id = require_string(item, "id", "guideline");
        if (std::find(seen.begin(), seen.end(), g.id) != seen.end())
            throw ValidationError("duplicate guideline id: " + g.id);
        seen.push_back(g.id);
        g.text = require_string(item, "text", "guideline " + g.id);
        g.evidence_weight = require_number(item, "evidence_weight", "guideline " + g.id);
        if (!(g.evidence_weight > 0.0 && g.evidence_weight <= 1.0))
            throw ValidationError("guideline " + g.id + ": evidence_weight must lie in (0, 1]");
        out.push_back(std::move(g));
    }
    return out;
}

void BoundaryRuleSet::validate() const {
    if (presence_patterns.empty())
        throw ConfigError("boundary rules: presence_patterns must be nonempty");
    if (risk_categories.empty())
        throw ConfigError("boundary rules: risk_categories must be nonempty");
    for (const auto& [name, elements] : risk_categories)
        if (elements.empty())
            throw ConfigError("boundary rules: risk category " + name +
                              " has no required elements");
    const double sum = alpha_presence + alpha_completeness + alpha_accuracy;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("boundary rules: alpha weights must sum to 1");
    if (alpha_presence < 0.0 || alpha_completeness < 0.0 || alpha_accuracy < 0.0)
        throw ConfigError("boundary rules: alpha weights must be nonnegative");
}

BoundaryRuleSet default_boundary_rules() {
    BoundaryRuleSet rules;
    rules.presence_patterns = {"consult healthcare provider", "emergency situations",
                               "not substitute for medical advice"};
    rules.risk_categories = {
        {"diagnosis", {"diagnostic uncertainty", "clinical correlation", "confirmatory testing"}},
        {"treatment", {"individual patient factors", "contraindications", "monitoring"}},
        {"emergency", {"call emergency services", "seek immediate care"}},
        {"medication", {"dosage verification", "drug interactions", "allergies"}},
    };
    rules.liability_rules = {{"guaranteed cure", true},
                             {"100% effective", true},
                             {"no risk", true}};
    rules.alpha_presence = 0.4;
    rules.alpha_completeness = 0.4;
    rules.alpha_accuracy = 0.2;
    return rules;
}

void VerificationWeights::validate() const {
    for (double b : {terminology, reasoning, guideline, boundary})
        if (b < 0.0 || b > 1.0)
            throw ConfigError("verification weights must lie in [0, 1]");
    const double sum = terminology + reasoning + guideline + boundary;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("verification weights must sum to 1 (got " + std::to_string(sum) +
                          ")");
}

void TerminologyConfig::validate() const {
    if (std::abs(w_umls + w_context - 1.0) > 1e-9)
        throw ConfigError("terminology weights w_umls + w_context must sum to 1");
    if (w_umls < 0.0 || w_context < 0.0)
        throw ConfigError("terminology weights must be nonnegative");
}

TerminologyConfig default_terminology_config() {
    TerminologyConfig cfg;
    cfg.w_umls = 0.7;
    cfg.w_context = 0.3;
    cfg.medical_suffixes = {"itis",  "osis",   "emia",   "oma",    "pathy", "algia",
                            "ectomy", "plasty", "scopy",  "graphy", "gram",  "megaly",
                            "penia",  "rrhea",  "sclerosis", "stenosis", "uria"};
    cfg.context_window = 5;
    return cfg;
}

ReasoningConfig default_reasoning_config() {
    ReasoningConfig cfg;
    cfg.stage_keywords = {
        {"symptom", "symptoms", "presentation", "presenting", "cardinal", "history"},
        {"differential", "differentials", "diagnoses", "hypotheses"},
        {"workup", "testing", "tests", "investigations", "labs", "examine", "evidence"},
        {"recommend", "recommendation", "management", "treatment", "plan"},
        {"limitations", "boundaries", "consult", "disclaimer", "emergency"},
    };
    return cfg;
}

GuidelineConfig default_guideline_config() {
    GuidelineConfig cfg;
    cfg.recommendation_cues = {"recommend", "should", "first-line", "indicated"};
    return cfg;
}

namespace {

/// A candidate medical term: a lexicon span or a suffix-heuristic token.
struct CandidateTerm {
    std::size_t start = 0;
    std::size_t end = 0; // inclusive token index
    std::string text;
    const LexiconEntry* entry = nullptr; // null when unmapped
};

bool has_medical_suffix(const std::string& norm, const std::vector<std::string>& suffixes) {
    for (const auto& suf : suffixes)
        if (norm.size() > suf.size() &&
            norm.compare(norm.size() - suf.size(), suf.size(), suf) == 0)
            return true;
    return false;
}

bool is_capitalized(const std::string& raw) {
    return !raw.empty() && std::isupper(static_cast<unsigned char>(raw[0]));
}

// Semantic types are compatible when equal, or when either side is untyped
// (unmapped candidates have no type to contradict).
bool types_compatible(const CandidateTerm& a, const CandidateTerm& b) {
    if (!a.entry || !b.entry)
        return true;
    return a.entry->semantic_type == b.entry->semantic_type;
}

} // namespace

std::pair<double, std::vector<TermEvidence>> verify_terminology(
    const PromptGenome& genome, const Lexicon& lexicon, const TerminologyConfig& cfg,
    std::vector<std::string>* notes) {
    cfg.validate();
    const std::string text = render_text(genome);
    const auto tokens = tokenize(text);
    const auto spans = identify_concepts(tokens, lexicon);

    std::vector<CandidateTerm> terms;
    std::vector<bool> in_span(tokens.size(), false);
    for (const auto& s : spans) {
        CandidateTerm t;
        t.start = s.start_token;
        t.end = s.end_token;
        t.entry = lexicon.by_concept_id(s.concept_id);
        for (std::size_t i = s.start_token; i <= s.end_token; ++i) {
            in_span[i] = true;
            if (!t.text.empty())
                t.text.push_back(' ');
            t.text += tokens[i].raw;
        }
        terms.push_back(std::move(t));
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (in_span[i] || tokens[i].norm.empty())
            continue;
        if (is_capitalized(tokens[i].raw) &&
            has_medical_suffix(tokens[i].norm, cfg.medical_suffixes))
            terms.push_back({i, i, tokens[i].raw, nullptr});
    }
    std::sort(terms.begin(), terms.end(),
              [](const CandidateTerm& a, const CandidateTerm& b) { return a.start < b.start; });

    std::vector<TermEvidence> evidence;
    if (terms.empty()) {
        if (notes)
            notes->push_back("terminology: no candidate medical terms (vacuous 1.0)");
        return {1.0, evidence};
    }

    double total = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        // Context: fraction of terms within +-window tokens sharing a
        // compatible semantic type; 1.0 when the window holds no other term.
        std::size_t neighbors = 0;
        std::size_t compatible = 0;
        const std::size_t lo = t.start >= cfg.context_window ? t.start - cfg.context_window : 0;
        const std::size_t hi = t.end + cfg.context_window;
        for (std::size_t j = 0; j < terms.size(); ++j) {
            if (j == i)
                continue;
            if (terms[j].end < lo || terms[j].start > hi)
                continue;
            ++neighbors;
            if (types_compatible(t, terms[j]))
                ++compatible;
        }
        const double context =
            neighbors == 0 ? 1.0
                           : static_cast<double>(compatible) / static_cast<double>(neighbors);
        const double umls = t.entry ? 1.0 : 0.0;
        total += umls * cfg.w_umls + context * cfg.w_context;
        evidence.push_back(
            {t.text, t.entry ? t.entry->concept_id : std::string{}, t.entry != nullptr, context});
    }
    return {total / static_cast<double>(terms.size()), evidence};
}

namespace {

struct MarkerHit {
    std::size_t pos = 0;
    bool opens_step = false;      // enumeration cue
    std::optional<int> ordinal;   // absolute ordinal for numbered/ordinal cues
    std::optional<int> stage;     // clinical stage for keywords
    std::string marker;
};

const std::pair<const char*, int> kOrdinalWords[] = {
    {"first", 1}, {"second", 2}, {"third", 3}, {"fourth", 4}, {"fifth", 5}};
const char* kRelativeCues[] = {"then", "next", "finally"};

} // namespace

std::vector<ChainStep> extract_reasoning_chain(const PromptGenome& genome,
                                               const ReasoningConfig& cfg) {
    std::vector<ChainStep> chain;
    for (const auto& comp : genome.components) {
        const auto tokens = tokenize(comp.text);
        std::vector<MarkerHit> hits;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const std::string& raw = tokens[i].raw;
            const std::string& norm = tokens[i].norm;
            if (norm.empty())
                continue;
            // Numbered cue: "(1)", "1.", "1)" -- a short all-digit normal form
            // wrapped in punctuation.
            const bool digits =
                std::all_of(norm.begin(), norm.end(),
                            [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
            if (digits && norm.size() <= 2 && raw != norm) {
                hits.push_back({i, true, std::stoi(norm), std::nullopt, raw});
                continue;
            }
            bool matched = false;
            for (const auto& [word, ord] : kOrdinalWords) {
                if (norm == word) {
                    hits.push_back({i, true, ord, std::nullopt, norm});
                    matched = true;
                    break;
                }
            }
            if (matched)
                continue;
            for (const char* cue : kRelativeCues) {
                if (norm == cue) {
                    hits.push_back({i, true, std::nullopt, std::nullopt, norm});
                    matched = true;
                    break;
                }
            }
            if (matched)
                continue;
            for (std::size_t stage = 0; stage < cfg.stage_keywords.size(); ++stage) {
                for (const auto& kw : cfg.stage_keywords[stage]) {
                    if (norm == kw) {
                        hits.push_back({i, false, std::nullopt, static_cast<int>(stage), norm});
                        matched = true;
                        break;
                    }
                }
                if (matched)
                    break;
            }
        }
        // Fold hits into steps: cues open steps, stage keywords tag the open
        // step (or open one themselves when no untagged step is open). A
        // keyword repeating the current step's stage is ignored.
        ChainStep* current = nullptr;
        for (const auto& hit : hits) {
            if (hit.opens_step) {
                chain.push_back({comp.category, hit.marker, std::nullopt, hit.ordinal});
                current = &chain.back();
            } else if (current && !current->stage) {
                current->stage = hit.stage;
            } else if (current && current->stage == hit.stage) {
                continue;
            } else {
                chain.push_back({comp.category, hit.marker, hit.stage, std::nullopt});
                current = &chain.back();
            }
        }
    }
    return chain;
}

double score_reasoning_coherence(const std::vector<ChainStep>& chain) {
    if (chain.size() < 2)
        return 0.5;
    std::size_t consistent = 0;
    const std::size_t pairs = chain.size() - 1;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        const ChainStep& a = chain[i];
        const ChainStep& b = chain[i + 1];
        bool ok = true;
        if (a.stage && b.stage)
            ok = *b.stage >= *a.stage;
        else if (a.enumeration && b.enumeration)
            ok = *b.enumeration >= *a.enumeration;
        if (ok)
            ++consistent;
    }
    return static_cast<double>(consistent) / static_cast<double>(pairs);
}

std::pair<double, std::vector<GuidelineMatch>> verify_guidelines(
    const PromptGenome& genome, const std::vector<GuidelineStatement>& guidelines,
    const EmbeddingProvider& provider, const GuidelineConfig& cfg,
    std::vector<std::string>* notes) {
    std::vector<GuidelineMatch> matches;
    if (guidelines.empty()) {
        if (notes)
            notes->push_back("guidelines: empty guideline set (neutral 0.5)");
        return {0.5, matches};
    }
    const std::string text = render_text(genome);
    std::vector<std::string> recommendations;
    for (const auto& sentence : split_sentences(text)) {
        const FoldedText folded(sentence.text);
        for (const auto& cue : cfg.recommendation_cues) {
            if (folded.contains(cue)) {
                recommendations.push_back(sentence.text);
                break;
            }
        }
    }
    if (recommendations.empty()) {
        if (notes)
            notes->push_back("guidelines: no recommendation sentences (vacuous 1.0)");
        return {1.0, matches};
    }
    std::vector<std::vector<double>> guideline_vectors;
    guideline_vectors.reserve(guidelines.size());
    for (const auto& g : guidelines)
        guideline_vectors.push_back(provider.embed(g.text).cls);
    double total = 0.0;
    for (const auto& r : recommendations) {
        const auto rv = provider.embed(r).cls;
        double best = 0.0;
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < guidelines.size(); ++i) {
            const double weighted =
                clamped_cosine(rv, guideline_vectors[i]) * guidelines[i].evidence_weight;
            if (weighted > best) {
                best = weighted;
                best_idx = i;
            }
        }
        matches.push_back({r, guidelines[best_idx].id, best});
        total += best;
    }
    return {total / static_cast<double>(recommendations.size()), matches};
}

std::pair<double, BoundaryEvidence> verify_boundaries(const PromptGenome& genome,
                                                      const BoundaryRuleSet& rules,
                                                      const std::string& risk_category) {
    rules.validate();
    auto cat = rules.risk_categories.find(risk_category);
    if (cat == rules.risk_categories.end())
        throw ValidationError("unknown risk category: " + risk_category);

    const FoldedText folded(render_text(genome));
    BoundaryEvidence ev;
    for (const auto& p : rules.presence_patterns)
        if (folded.contains(p))
            ev.matched_presence_patterns.push_back(p);
    ev.presence = static_cast<double>(ev.matched_presence_patterns.size()) /
                  static_cast<double>(rules.presence_patterns.size());

    for (const auto& element : cat->second)
        if (folded.contains(element))
            ev.addressed_elements.push_back(element);
    ev.completeness = static_cast<double>(ev.addressed_elements.size()) /
                      static_cast<double>(cat->second.size());

    if (rules.liability_rules.empty()) {
        ev.accuracy = 1.0;
    } else {
        for (const auto& rule : rules.liability_rules) {
            const bool present = folded.contains(rule.pattern);
            if (rule.forbidden == present)
                ev.violated_rules.push_back(rule.pattern);
        }
        ev.accuracy = 1.0 - static_cast<double>(ev.violated_rules.size()) /
                                static_cast<double>(rules.liability_rules.size());
    }

    const double score = rules.alpha_presence * ev.presence +
                         rules.alpha_completeness * ev.completeness +
                         rules.alpha_accuracy * ev.accuracy;
    return {score, ev};
}

VerificationReport integrated_verification(double v_term, double v_logic, double v_guideline,
                                           double v_boundary, const VerificationWeights& vw,
                                           double tau) {
    vw.validate();
    if (!(tau > 0.0 && tau <= 1.0))
        throw ConfigError("verification threshold tau must lie in (0, 1]");
    for (double v : {v_term, v_logic, v_guideline, v_boundary})
        if (v < 0.0 || v > 1.0)
            throw ValidationError("verification sub-scores must lie in [0, 1]");
    VerificationReport report;
    report.v_term = v_term;
    report.v_logic = v_logic;
    report.v_guideline = v_guideline;
    report.v_boundary = v_boundary;
    report.weights = vw;
    report.tau = tau;
    report.v_total = vw.terminology * v_term + vw.reasoning * v_logic +
                     vw.guideline * v_guideline + vw.boundary * v_boundary;
    report.pass = report.v_total >= tau;
    return report;
}

} // namespace medprompt
