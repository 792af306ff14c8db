#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "medprompt/embedding.hpp"
#include "medprompt/errors.hpp"
#include "medprompt/rng.hpp"
#include "medprompt/verification.hpp"

#include <algorithm>

using namespace medprompt;

namespace {

const CategorySet& cats() { return CategorySet::canonical(); }

PromptComponent comp(std::uint32_t c, std::string text) {
    return PromptComponent{Category{c}, std::move(text), 0.5, Origin::library};
}

PromptGenome one_comp_genome(std::uint32_t c, std::string text) {
    return make_genome(1, ScenarioKind::diagnosis, {comp(c, std::move(text))}, cats());
}

Lexicon demo_lexicon() {
    return Lexicon({
        {{"aspirin"}, "C1", "Drug", 2, 0.8},
        {{"prednisone"}, "C2", "Drug", 2, 0.8},
        {{"temporal arteritis"}, "C3", "Disease", 4, 0.9},
        {{"esr"}, "C4", "Lab", 3, 0.6},
    });
}

} // namespace

TEST_CASE("terminology: all terms mapped with clean contexts scores 1.0") {
    const auto lex = demo_lexicon();
    TerminologyConfig cfg = default_terminology_config();
    cfg.w_umls = 0.7;
    cfg.w_context = 0.3;
    const auto g = one_comp_genome(1, "aspirin and prednisone are candidates");
    auto [score, evidence] = verify_terminology(g, lex, cfg);
    REQUIRE(evidence.size() == 2);
    CHECK(score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("terminology: no candidate terms is vacuous 1.0 and flagged") {
    const auto lex = demo_lexicon();
    std::vector<std::string> notes;
    const auto g = one_comp_genome(0, "plain words only here");
    auto [score, evidence] = verify_terminology(g, lex, default_terminology_config(), &notes);
    CHECK(score == 1.0);
    CHECK(evidence.empty());
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].find("vacuous") != std::string::npos);
}

TEST_CASE("terminology: 1 of 2 terms mapped, both contexts 1.0, gives 0.65") {
    const auto lex = demo_lexicon();
    TerminologyConfig cfg = default_terminology_config();
    // Pancreatitis: capitalized, medical suffix, not in the lexicon -> unmapped
    // candidate. Hand evaluation: (0.7*1 + 0.3*1 + 0.7*0 + 0.3*1) / 2 = 0.65.
    const auto g = one_comp_genome(1, "aspirin helps Pancreatitis sometimes");
    auto [score, evidence] = verify_terminology(g, lex, cfg);
    REQUIRE(evidence.size() == 2);
    CHECK(score == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(evidence[0].mapped != evidence[1].mapped);
}

TEST_CASE("terminology: incompatible neighbor types reduce the context factor") {
    const auto lex = demo_lexicon();
    const auto g = one_comp_genome(1, "aspirin esr"); // Drug next to Lab
    auto [score, evidence] = verify_terminology(g, lex, default_terminology_config());
    REQUIRE(evidence.size() == 2);
    CHECK(evidence[0].context == doctest::Approx(0.0));
    // (0.7 + 0) * 2 / 2 = 0.7
    CHECK(score == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("terminology: lowercase or suffix-free unknown tokens are not candidates") {
    const auto lex = demo_lexicon();
    // "pancreatitis" lowercase and "Xylofen" capitalized without medical suffix
    const auto g = one_comp_genome(1, "pancreatitis and Xylofen together");
    auto [score, evidence] = verify_terminology(g, lex, default_terminology_config());
    CHECK(evidence.empty());
    CHECK(score == 1.0);
}

TEST_CASE("chain extraction: numbered cues with stage keywords give 3 steps") {
    const auto g =
        one_comp_genome(1, "(1) analyze symptoms, (2) differential, (3) workup");
    const auto chain = extract_reasoning_chain(g, default_reasoning_config());
    REQUIRE(chain.size() == 3);
    CHECK(chain[0].enumeration == 1);
    CHECK(chain[0].stage == 0);
    CHECK(chain[1].enumeration == 2);
    CHECK(chain[1].stage == 1);
    CHECK(chain[2].enumeration == 3);
    CHECK(chain[2].stage == 2);
}

TEST_CASE("chain extraction: ordinal-word cues give 3 steps") {
    const auto g = one_comp_genome(1, "first gather facts then compare options finally decide");
    const auto chain = extract_reasoning_chain(g, default_reasoning_config());
    REQUIRE(chain.size() == 3);
    CHECK(chain[0].marker == "first");
    CHECK(chain[1].marker == "then");
    CHECK(chain[2].marker == "finally");
}

TEST_CASE("chain extraction: marker-free genome yields an empty chain") {
    const auto g = make_genome(
        1, ScenarioKind::diagnosis,
        {comp(0, "You are a careful clinician."), comp(4, "Defer individual choices.")},
        cats());
    CHECK(extract_reasoning_chain(g, default_reasoning_config()).empty());
}

TEST_CASE("coherence: fully ordered four-step chain scores 1.0") {
    const auto g = one_comp_genome(
        1, "first review symptoms. then list differential. then order workup. then state "
           "recommend course.");
    const auto chain = extract_reasoning_chain(g, default_reasoning_config());
    REQUIRE(chain.size() == 4);
    CHECK(score_reasoning_coherence(chain) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("coherence: fully reversed chain scores 0.0") {
    const auto g = one_comp_genome(
        1, "recommend strongly. then examine closely. then differential review. then symptoms "
           "overview.");
    const auto chain = extract_reasoning_chain(g, default_reasoning_config());
    REQUIRE(chain.size() == 4);
    CHECK(score_reasoning_coherence(chain) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coherence: reversed enumeration is inconsistent") {
    const auto g = one_comp_genome(1, "(3) close out, (2) middle part, (1) opening move");
    const auto chain = extract_reasoning_chain(g, default_reasoning_config());
    REQUIRE(chain.size() == 3);
    CHECK(score_reasoning_coherence(chain) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coherence: empty and singleton chains are neutral 0.5") {
    CHECK(score_reasoning_coherence({}) == 0.5);
    ChainStep only{Category{1}, "first", std::nullopt, 1};
    CHECK(score_reasoning_coherence({only}) == 0.5);
}

TEST_CASE("guidelines: extracted recommendation scores its own cosine") {
    OfflineHashProvider provider(32, 9);
    std::vector<GuidelineStatement> guidelines = {
        {"G1", "start high dose steroids when arteritis is suspected", 1.0}};
    const auto g = one_comp_genome(
        2, "We recommend start high dose steroids when arteritis is suspected");
    auto [score, matches] =
        verify_guidelines(g, guidelines, provider, default_guideline_config());
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].guideline_id == "G1");
    const auto rv = provider.embed(matches[0].recommendation).cls;
    const auto gv = provider.embed(guidelines[0].text).cls;
    CHECK(score == doctest::Approx(clamped_cosine(rv, gv)).epsilon(1e-12));
}

TEST_CASE("guidelines: exact sentence match gives cosine 1.0") {
    OfflineHashProvider provider(32, 9);
    const std::string text = "recommend prednisone taper over several weeks";
    std::vector<GuidelineStatement> guidelines = {{"G1", text, 1.0}};
    const auto g = one_comp_genome(2, text);
    auto [score, matches] =
        verify_guidelines(g, guidelines, provider, default_guideline_config());
    CHECK(score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("guidelines: no recommendation sentences is vacuous 1.0") {
    OfflineHashProvider provider(16, 4);
    std::vector<GuidelineStatement> guidelines = {{"G1", "some guideline", 1.0}};
    std::vector<std::string> notes;
    const auto g = one_comp_genome(2, "Describe the findings without advice.");
    auto [score, matches] =
        verify_guidelines(g, guidelines, provider, default_guideline_config(), &notes);
    CHECK(score == 1.0);
    CHECK(matches.empty());
    CHECK(!notes.empty());
}

TEST_CASE("guidelines: empty guideline set is neutral 0.5 with warning") {
    OfflineHashProvider provider(16, 4);
    std::vector<std::string> notes;
    const auto g = one_comp_genome(2, "We recommend rest.");
    auto [score, matches] =
        verify_guidelines(g, {}, provider, default_guideline_config(), &notes);
    CHECK(score == 0.5);
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].find("neutral") != std::string::npos);
}

TEST_CASE("guidelines: best weighted similarity wins (fixture oracle)") {
    OfflineHashProvider provider(64, 21);
    std::vector<GuidelineStatement> guidelines = {
        {"GA", "escalate to urgent ophthalmology review for visual symptoms", 1.0},
        {"GB", "order inflammatory markers and temporal artery biopsy", 1.0},
    };
    const auto g = one_comp_genome(
        2, "We recommend order inflammatory markers and biopsy early");
    auto [score, matches] =
        verify_guidelines(g, guidelines, provider, default_guideline_config());
    REQUIRE(matches.size() == 1);
    // Oracle: compute both cosines directly and take the max.
    const auto rv = provider.embed(matches[0].recommendation).cls;
    double best = 0.0;
    for (const auto& gl : guidelines)
        best = std::max(best, clamped_cosine(rv, provider.embed(gl.text).cls));
    CHECK(score == doctest::Approx(best).epsilon(1e-12));
    CHECK(matches[0].guideline_id == "GB");
}

TEST_CASE("guidelines: evidence weight scales the similarity") {
    OfflineHashProvider provider(32, 5);
    const std::string text = "recommend close monitoring of inflammatory markers";
    std::vector<GuidelineStatement> guidelines = {{"G1", text, 0.5}};
    const auto g = one_comp_genome(2, text);
    auto [score, matches] =
        verify_guidelines(g, guidelines, provider, default_guideline_config());
    CHECK(score == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("boundaries: all patterns, all elements, no violations scores 1.0") {
    BoundaryRuleSet rules = default_boundary_rules();
    rules.alpha_presence = 1.0 / 3;
    rules.alpha_completeness = 1.0 / 3;
    rules.alpha_accuracy = 1.0 / 3;
    const auto g = one_comp_genome(
        4, "Always consult healthcare provider. In emergency situations seek help. This is "
           "not substitute for medical advice. Expect diagnostic uncertainty, apply clinical "
           "correlation, and plan confirmatory testing.");
    auto [score, ev] = verify_boundaries(g, rules, "diagnosis");
    CHECK(ev.presence == doctest::Approx(1.0));
    CHECK(ev.completeness == doctest::Approx(1.0));
    CHECK(ev.accuracy == doctest::Approx(1.0));
    CHECK(score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("boundaries: 2 of 3 presence patterns with alpha1 = 1 scores 2/3") {
    BoundaryRuleSet rules = default_boundary_rules();
    rules.alpha_presence = 1.0;
    rules.alpha_completeness = 0.0;
    rules.alpha_accuracy = 0.0;
    const auto g = one_comp_genome(
        4, "Do consult healthcare provider and plan for emergency situations.");
    auto [score, ev] = verify_boundaries(g, rules, "diagnosis");
    CHECK(ev.matched_presence_patterns.size() == 2);
    CHECK(score == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("boundaries: hand-evaluated weighted combination 0.8") {
    BoundaryRuleSet rules = default_boundary_rules();
    rules.alpha_presence = 0.4;
    rules.alpha_completeness = 0.4;
    rules.alpha_accuracy = 0.2;
    rules.risk_categories["diagnosis"] = {"clinical correlation", "confirmatory testing"};
    // presence 3/3 = 1.0, completeness 1/2 = 0.5, accuracy 1.0
    // score = 0.4*1 + 0.4*0.5 + 0.2*1 = 0.8
    const auto g = one_comp_genome(
        4, "Please consult healthcare provider; emergency situations need urgent care; this "
           "is not substitute for medical advice. Seek clinical correlation.");
    auto [score, ev] = verify_boundaries(g, rules, "diagnosis");
    CHECK(ev.presence == doctest::Approx(1.0));
    CHECK(ev.completeness == doctest::Approx(0.5));
    CHECK(ev.accuracy == doctest::Approx(1.0));
    CHECK(score == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("boundaries: liability violations lower accuracy; empty rules give 1.0") {
    BoundaryRuleSet rules = default_boundary_rules();
    const auto g = one_comp_genome(4, "This offers a guaranteed cure with no risk at all.");
    auto [score, ev] = verify_boundaries(g, rules, "treatment");
    CHECK(ev.violated_rules.size() == 2);
    CHECK(ev.accuracy == doctest::Approx(1.0 - 2.0 / 3.0).epsilon(1e-12));

    rules.liability_rules.clear();
    auto [score2, ev2] = verify_boundaries(g, rules, "treatment");
    CHECK(ev2.accuracy == 1.0);
    (void)score;
    (void)score2;
}

TEST_CASE("boundaries: unknown risk category is an error") {
    const auto g = one_comp_genome(4, "text");
    CHECK_THROWS_WITH_AS(verify_boundaries(g, default_boundary_rules(), "cosmetic"),
                         doctest::Contains("cosmetic"), ValidationError);
}

TEST_CASE("boundaries are a pure function of text, rules and category") {
    Rng rng(77);
    BoundaryRuleSet rules = default_boundary_rules();
    const char* words[] = {"consult",  "healthcare", "provider",  "emergency",
                           "situations", "advice",   "guaranteed", "cure",
                           "testing",  "monitoring", "plain",     "words"};
    for (int iter = 0; iter < 200; ++iter) {
        std::string text;
        const std::size_t n = 3 + rng.index(25);
        for (std::size_t i = 0; i < n; ++i) {
            if (!text.empty())
                text.push_back(' ');
            text += words[rng.index(12)];
        }
        const auto g = one_comp_genome(4, text);
        auto [s1, e1] = verify_boundaries(g, rules, "diagnosis");
        auto [s2, e2] = verify_boundaries(g, rules, "diagnosis");
        CHECK(s1 == s2);
        CHECK(e1 == e2);
    }
}

TEST_CASE("integrated verification: all ones pass at tau 0.75") {
    const auto report = integrated_verification(1, 1, 1, 1, VerificationWeights{}, 0.75);
    CHECK(report.v_total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.pass);
}

TEST_CASE("integrated verification: all zeros fail") {
    const auto report = integrated_verification(0, 0, 0, 0, VerificationWeights{}, 0.75);
    CHECK(report.v_total == 0.0);
    CHECK(!report.pass);
}

TEST_CASE("integrated verification: hand arithmetic 0.765 passes") {
    VerificationWeights vw{0.3, 0.25, 0.25, 0.2};
    const auto report = integrated_verification(0.9, 0.8, 0.7, 0.6, vw, 0.75);
    CHECK(report.v_total == doctest::Approx(0.765).epsilon(1e-12));
    CHECK(report.pass);
}

TEST_CASE("integrated verification validates weights and sub-score ranges") {
    VerificationWeights bad{0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_AS(integrated_verification(1, 1, 1, 1, bad, 0.75), ConfigError);
    CHECK_THROWS_AS(integrated_verification(1.5, 0, 0, 0, VerificationWeights{}, 0.75),
                    ValidationError);
    CHECK_THROWS_AS(integrated_verification(1, 1, 1, 1, VerificationWeights{}, 0.0),
                    ConfigError);
}

TEST_CASE("v_total is monotone in each sub-score and bounded") {
    Rng rng(1234);
    for (int iter = 0; iter < 500; ++iter) {
        double v[4];
        for (double& x : v)
            x = rng.uniform01();
        const auto r = integrated_verification(v[0], v[1], v[2], v[3],
                                               VerificationWeights{}, 0.75);
        CHECK(r.v_total >= 0.0);
        CHECK(r.v_total <= 1.0 + 1e-12);
        const int bump = static_cast<int>(rng.index(4));
        double v2[4] = {v[0], v[1], v[2], v[3]};
        v2[bump] = std::min(1.0, v2[bump] + rng.uniform01() * 0.4);
        const auto r2 = integrated_verification(v2[0], v2[1], v2[2], v2[3],
                                                VerificationWeights{}, 0.75);
        CHECK(r2.v_total >= r.v_total - 1e-12);
    }
}
