#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "medprompt/embedding.hpp"
#include "medprompt/errors.hpp"
#include "medprompt/lexicon.hpp"
#include "medprompt/representation.hpp"
#include "medprompt/rng.hpp"

#include <cmath>
#include <numeric>

using namespace medprompt;

namespace {

double norm2(const std::vector<double>& v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Independent oracle: textbook O(mn) Levenshtein table, no shortcuts.
std::size_t lev_oracle(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> t(a.size() + 1,
                                            std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i)
        t[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j)
        t[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = t[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            t[i][j] = std::min({t[i - 1][j] + 1, t[i][j - 1] + 1, sub});
        }
    return t[a.size()][b.size()];
}

Lexicon tiny_lexicon() {
    return Lexicon({
        {{"jaw claudication"}, "C01", "Symptom", 3, 0.9},
        {{"giant cell arteritis", "temporal arteritis"}, "C02", "Disease", 4, 1.0},
        {{"giant cell"}, "C03", "Cell", 5, 0.4},
        {{"aspirin", "acetylsalicylic acid"}, "C04", "Drug", 2, 0.7},
    });
}

std::vector<Token> toks(std::initializer_list<const char*> words) {
    std::string text;
    for (const char* w : words) {
        if (!text.empty())
            text.push_back(' ');
        text += w;
    }
    return tokenize(text);
}

Matrix identity_block(std::size_t rows, std::size_t cols) {
    Matrix m;
    m.rows = rows;
    m.cols = cols;
    m.data.assign(rows * cols, 0.0);
    for (std::size_t i = 0; i < rows && i < cols; ++i)
        m.at(i, i) = 1.0;
    return m;
}

} // namespace

TEST_CASE("offline embed is deterministic") {
    OfflineHashProvider p(16, 42);
    const auto a = p.embed("aspirin");
    const auto b = p.embed("aspirin");
    CHECK(a.matrix.data == b.matrix.data);
    CHECK(a.cls == b.cls);
}

TEST_CASE("single-token text pools to that token's vector") {
    OfflineHashProvider p(32, 7);
    const auto r = p.embed("aspirin");
    REQUIRE(r.tokens.size() == 1);
    for (std::size_t j = 0; j < 32; ++j)
        CHECK(r.cls[j] == doctest::Approx(r.matrix.row(0)[j]).epsilon(1e-12));
}

TEST_CASE("pooled vector norm never exceeds 1") {
    OfflineHashProvider p(64, 11);
    // Multi-token texts: each token vector is unit; the normalized mean is <= 1.
    for (const char* text : {"alpha beta", "one two three four", "x y"}) {
        const auto r = p.embed(text);
        CHECK(norm2(r.cls) <= 1.0 + 1e-12);
        for (std::size_t i = 0; i < r.tokens.size(); ++i) {
            std::vector<double> row(r.matrix.row(i), r.matrix.row(i) + 64);
            CHECK(norm2(row) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("embed rejects empty text") {
    OfflineHashProvider p(8, 1);
    CHECK_THROWS_AS(p.embed("   "), ValidationError);
}

TEST_CASE("identify_concepts finds an exact multi-token span") {
    const auto spans = identify_concepts(toks({"jaw", "claudication"}), tiny_lexicon());
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].concept_id == "C01");
    CHECK(spans[0].start_token == 0);
    CHECK(spans[0].end_token == 1);
    CHECK(spans[0].match_confidence == 1.0);
}

TEST_CASE("longest match wins over a shorter overlapping candidate") {
    const auto spans = identify_concepts(toks({"giant", "cell", "arteritis"}), tiny_lexicon());
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].concept_id == "C02");
    CHECK(spans[0].end_token == 2);
}

TEST_CASE("fuzzy match carries the edit similarity as confidence") {
    // aspirn vs aspirin: oracle distance 1 over max length 7.
    const double expected = 1.0 - static_cast<double>(lev_oracle("aspirn", "aspirin")) / 7.0;
    CHECK(expected == doctest::Approx(0.857142857142857).epsilon(1e-12));
    const auto spans = identify_concepts(toks({"aspirn"}), tiny_lexicon());
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].concept_id == "C04");
    CHECK(spans[0].match_confidence == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("similarity below 0.8 is not matched") {
    const auto spans = identify_concepts(toks({"asprn"}), tiny_lexicon());
    // lev("asprn","aspirin") = 2, sim = 1 - 2/7 ~= 0.714 < 0.8
    CHECK(lev_oracle("asprn", "aspirin") == 2);
    CHECK(spans.empty());
}

TEST_CASE("equal-length tie breaks to the smallest concept id") {
    Lexicon lex({
        {{"chest pain"}, "C10", "Symptom", 1, 0.5},
        {{"chest pain"}, "C09", "Finding", 1, 0.5},
    });
    const auto spans = identify_concepts(toks({"chest", "pain"}), lex);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].concept_id == "C09");
}

TEST_CASE("matched spans never overlap") {
    const auto spans =
        identify_concepts(toks({"giant", "cell", "arteritis", "and", "jaw", "claudication"}),
                          tiny_lexicon());
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].end_token < spans[1].start_token);
}

TEST_CASE("concept_representation averages the spanned rows") {
    TokenMatrix m;
    m.rows = 3;
    m.dim = 2;
    m.data = {1.0, 0.0, 0.0, 1.0, 4.0, 4.0};
    CHECK(concept_representation(m, {"c", 0, 0, 1.0}) == std::vector<double>{1.0, 0.0});
    CHECK(concept_representation(m, {"c", 0, 1, 1.0}) == std::vector<double>{0.5, 0.5});
    TokenMatrix same;
    same.rows = 2;
    same.dim = 2;
    same.data = {2.0, 3.0, 2.0, 3.0};
    CHECK(concept_representation(same, {"c", 0, 1, 1.0}) == std::vector<double>{2.0, 3.0});
}

TEST_CASE("concept_attention: equal triples are uniform for any weights") {
    std::vector<ConceptFactors> factors(4, ConceptFactors{0.3, 0.6, 0.9});
    const auto alpha = concept_attention(factors, {2.0, -1.0, 0.5});
    for (double a : alpha)
        CHECK(a == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("concept_attention: zero weights give uniform alpha") {
    std::vector<ConceptFactors> factors = {{0.1, 0.2, 0.3}, {0.9, 0.8, 0.7}, {0.5, 0.5, 0.5}};
    const auto alpha = concept_attention(factors, {0.0, 0.0, 0.0});
    for (double a : alpha)
        CHECK(a == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("concept_attention: logits (0, ln 3) give (0.25, 0.75)") {
    // w_s = 1, others 0; s values are the logits directly.
    std::vector<ConceptFactors> factors = {{0.0, 0.0, 0.0}, {std::log(3.0), 0.0, 0.0}};
    const auto alpha = concept_attention(factors, {1.0, 0.0, 0.0});
    CHECK(alpha[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(alpha[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("concept_attention rejects an empty concept list") {
    CHECK_THROWS_AS(concept_attention({}, {1, 1, 1}), ValidationError);
}

TEST_CASE("attention normalization and shift invariance over random inputs") {
    Rng rng(2718);
    for (int iter = 0; iter < 2000; ++iter) {
        const std::size_t n = 1 + rng.index(6);
        std::vector<ConceptFactors> factors(n);
        for (auto& f : factors) {
            f.s = rng.uniform01() * 4 - 2;
            f.h = rng.uniform01();
            f.p = rng.uniform01();
        }
        AttentionFactorWeights w{rng.uniform01() * 4 - 2, rng.uniform01() * 4 - 2,
                                 rng.uniform01() * 4 - 2};
        const auto alpha = concept_attention(factors, w);
        double total = 0.0;
        for (double a : alpha) {
            CHECK(a > 0.0);
            total += a;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

        // Shifting every s by a constant shifts all logits by w_s * delta.
        const double delta = rng.uniform01() * 10 - 5;
        auto shifted = factors;
        for (auto& f : shifted)
            f.s += delta;
        const auto alpha2 = concept_attention(shifted, w);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(alpha2[i] == doctest::Approx(alpha[i]).epsilon(1e-9));
    }
}

TEST_CASE("attention is strictly monotone in s when w_s > 0") {
    std::vector<ConceptFactors> factors = {{0.2, 0.5, 0.5}, {0.4, 0.5, 0.5}};
    const AttentionFactorWeights w{1.5, 0.3, 0.3};
    const auto before = concept_attention(factors, w);
    factors[0].s = 0.35;
    const auto after = concept_attention(factors, w);
    CHECK(after[0] > before[0]);
}

TEST_CASE("terminology_representation: identity block recovers cls") {
    // W_g = [I | 0], b = 0 -> z = cls regardless of concepts.
    const std::size_t d = 3;
    Matrix w_g = identity_block(d, 2 * d);
    std::vector<double> b(d, 0.0);
    const std::vector<double> cls = {0.5, -1.0, 2.0};
    const std::vector<std::vector<double>> concepts = {{1.0, 1.0, 1.0}};
    const auto z = terminology_representation(cls, concepts, {1.0}, w_g, b);
    CHECK(z == cls);
}

TEST_CASE("terminology_representation: degenerate alpha selects one concept") {
    // W_g = [0 | I] extracts the pooled concept block.
    const std::size_t d = 2;
    Matrix w_g;
    w_g.rows = d;
    w_g.cols = 2 * d;
    w_g.data.assign(d * 2 * d, 0.0);
    w_g.at(0, 2) = 1.0;
    w_g.at(1, 3) = 1.0;
    const std::vector<std::vector<double>> concepts = {{7.0, 8.0}, {100.0, 100.0}};
    const auto z = terminology_representation({0.0, 0.0}, concepts, {1.0, 0.0}, w_g,
                                              {0.0, 0.0});
    CHECK(z == std::vector<double>{7.0, 8.0});
}

TEST_CASE("terminology_representation: hand-checked 2x4 case") {
    // cls = (1, 0), one concept m = (0, 1), alpha = (1).
    // W_g sums coordinate pairs: row0 = (1,0,1,0), row1 = (0,1,0,1), b = 0.
    // concat = (1, 0, 0, 1) -> z = (1, 1).
    Matrix w_g;
    w_g.rows = 2;
    w_g.cols = 4;
    w_g.data = {1, 0, 1, 0, 0, 1, 0, 1};
    const auto z =
        terminology_representation({1.0, 0.0}, {{0.0, 1.0}}, {1.0}, w_g, {0.0, 0.0});
    CHECK(z == std::vector<double>{1.0, 1.0});
}

TEST_CASE("terminology_representation rejects shape mismatches") {
    Matrix w_g = identity_block(2, 4);
    CHECK_THROWS_AS(
        terminology_representation({1.0, 0.0, 0.0}, {}, {}, w_g, {0.0, 0.0}),
        ValidationError);
}

namespace {

ProjectionWeights k5_weights() {
    ProjectionWeights pw;
    pw.d = 2;
    pw.d_prime = 2;
    pw.d_double_prime = 2;
    pw.k = 5;
    for (std::size_t j = 0; j < 5; ++j) {
        std::vector<double> e(5, 0.0);
        e[j] = 1.0;
        pw.reasoning_embeddings.push_back(e);
    }
    return pw;
}

PromptComponent rcomp(std::uint32_t c, double q) {
    return PromptComponent{Category{c}, "text", q, Origin::library};
}

} // namespace

TEST_CASE("reasoning encoding: single component selects its embedding") {
    const auto pw = k5_weights();
    PromptGenome g = make_genome(1, ScenarioKind::diagnosis, {rcomp(2, 0.4)},
                                 CategorySet::canonical());
    const auto r = reasoning_structure_encoding(g, pw);
    CHECK(r == std::vector<double>{0, 0, 1, 0, 0});
}

TEST_CASE("reasoning encoding: equal qualities average the embeddings") {
    const auto pw = k5_weights();
    PromptGenome g = make_genome(1, ScenarioKind::diagnosis, {rcomp(1, 0.6), rcomp(3, 0.6)},
                                 CategorySet::canonical());
    const auto r = reasoning_structure_encoding(g, pw);
    CHECK(r[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r[3] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r[0] == 0.0);
}

TEST_CASE("reasoning encoding: no eligible components gives the zero vector") {
    ProjectionWeights pw = k5_weights();
    pw.k = 2; // only the first two categories carry embeddings
    pw.reasoning_embeddings = {{1.0, 0.0}, {0.0, 1.0}};
    PromptGenome g = make_genome(1, ScenarioKind::diagnosis, {rcomp(3, 0.9)},
                                 CategorySet::canonical());
    CHECK(reasoning_structure_encoding(g, pw) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("final_representation: identity and bias-only degenerate cases") {
    ProjectionWeights pw;
    pw.d_prime = 2;
    pw.k = 2;
    pw.d_double_prime = 2;
    pw.w_f = identity_block(2, 4);
    pw.b_f = {0.0, 0.0};
    CHECK(final_representation({3.0, -2.0}, {9.0, 9.0}, pw) ==
          std::vector<double>{3.0, -2.0});
    pw.w_f.data.assign(8, 0.0);
    pw.b_f = {0.25, -0.75};
    CHECK(final_representation({3.0, -2.0}, {9.0, 9.0}, pw) ==
          std::vector<double>{0.25, -0.75});
}

TEST_CASE("final_representation: hand-checked 2x(2+2) product") {
    // z = (1, 2), r = (3, 4); W rows (1,1,0,0) and (0,0,1,-1); b = (0.5, 0).
    // out = (1+2+0.5, 3-4) = (3.5, -1).
    ProjectionWeights pw;
    pw.d_prime = 2;
    pw.k = 2;
    pw.d_double_prime = 2;
    pw.w_f.rows = 2;
    pw.w_f.cols = 4;
    pw.w_f.data = {1, 1, 0, 0, 0, 0, 1, -1};
    pw.b_f = {0.5, 0.0};
    const auto out = final_representation({1.0, 2.0}, {3.0, 4.0}, pw);
    CHECK(out[0] == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("weights file round trips and validates shapes") {
    ModelWeights w;
    w.projection.d = 2;
    w.projection.d_prime = 2;
    w.projection.d_double_prime = 2;
    w.projection.k = 2;
    w.hidden = 3;
    w.attention = {1.0, 0.5, 0.25};
    w.projection.w_g = identity_block(2, 4);
    w.projection.b_g = {0.0, 0.1};
    w.projection.w_f = identity_block(2, 4);
    w.projection.b_f = {0.2, 0.3};
    w.projection.reasoning_embeddings = {{1.0, 0.0}, {0.0, 1.0}};
    for (int i = 0; i < 4; ++i) {
        w.heads[i].w1 = identity_block(3, 2);
        w.heads[i].b1 = {0, 0, 0};
        w.heads[i].ln_gain = {1, 1, 1};
        w.heads[i].ln_bias = {0, 0, 0};
        w.heads[i].w2 = {0.1, 0.2, 0.3};
        w.heads[i].b2 = 0.5;
    }
    const auto bytes = serialize_model_weights(w);
    const auto back = load_model_weights(bytes);
    CHECK(back.projection.w_g.data == w.projection.w_g.data);
    CHECK(back.heads[2].w2 == w.heads[2].w2);

    // Corrupt a shape and expect rejection.
    auto broken = bytes;
    const auto pos = broken.find("\"k\":2");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, 5, "\"k\":3");
    CHECK_THROWS_AS(load_model_weights(broken), ValidationError);
}

TEST_CASE("genome_representation produces finite vectors") {
    OfflineHashProvider provider(4, 5);
    const auto lex = tiny_lexicon();
    ModelWeights w;
    w.projection.d = 4;
    w.projection.d_prime = 3;
    w.projection.d_double_prime = 2;
    w.projection.k = 5;
    w.hidden = 2;
    w.attention = {1.0, 1.0, 1.0};
    w.projection.w_g = identity_block(3, 8);
    w.projection.b_g = {0.0, 0.0, 0.0};
    w.projection.w_f = identity_block(2, 8);
    w.projection.b_f = {0.0, 0.0};
    for (std::size_t j = 0; j < 5; ++j) {
        std::vector<double> e(5, 0.0);
        e[j] = 1.0;
        w.projection.reasoning_embeddings.push_back(e);
    }
    PromptGenome g = make_genome(
        1, ScenarioKind::diagnosis,
        {PromptComponent{Category{1}, "consider giant cell arteritis and aspirin", 0.7,
                         Origin::library}},
        CategorySet::canonical());
    const auto z = genome_representation(g, provider, lex, w);
    REQUIRE(z.size() == 2);
    for (double x : z)
        CHECK(std::isfinite(x));
}
