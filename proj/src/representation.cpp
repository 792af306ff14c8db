#include "medprompt/representation.hpp"

#include "medprompt/errors.hpp"
#include "medprompt/json_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace medprompt {

using nlohmann::json;

std::vector<double> affine(const Matrix& m, const std::vector<double>& x,
                           const std::vector<double>& b) {
    if (m.cols != x.size() || m.rows != b.size())
        throw ValidationError("affine: shape mismatch (" + std::to_string(m.rows) + "x" +
                              std::to_string(m.cols) + " vs x:" + std::to_string(x.size()) +
                              " b:" + std::to_string(b.size()) + ")");
    std::vector<double> y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* row = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c)
            acc += row[c] * x[c];
        y[r] = acc + b[r];
    }
    return y;
}

std::vector<double> concept_attention(const std::vector<ConceptFactors>& factors,
                                      const AttentionFactorWeights& fw) {
    if (factors.empty())
        throw ValidationError("concept_attention: no concepts");
    std::vector<double> logits(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const auto& f = factors[i];
        if (!std::isfinite(f.s) || !std::isfinite(f.h) || !std::isfinite(f.p))
            throw ValidationError("concept_attention: non-finite factor");
        logits[i] = fw.w_s * f.s + fw.w_h * f.h + fw.w_p * f.p;
    }
    // Max-shifted softmax for numeric stability; shift invariance is part of
    // the contract anyway.
    const double m = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    std::vector<double> alpha(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        alpha[i] = std::exp(logits[i] - m);
        total += alpha[i];
    }
    for (double& a : alpha)
        a /= total;
    return alpha;
}

std::vector<double> concept_representation(const TokenMatrix& matrix, const ConceptSpan& span) {
    if (span.end_token < span.start_token || span.end_token >= matrix.rows)
        throw ValidationError("concept_representation: span out of range");
    std::vector<double> v(matrix.dim, 0.0);
    const std::size_t count = span.end_token - span.start_token + 1;
    for (std::size_t i = span.start_token; i <= span.end_token; ++i) {
        const double* row = matrix.row(i);
        for (std::size_t j = 0; j < matrix.dim; ++j)
            v[j] += row[j];
    }
    for (double& x : v)
        x /= static_cast<double>(count);
    return v;
}

std::vector<ConceptFactors> concept_factors(const std::vector<ConceptSpan>& spans,
                                            const Lexicon& lexicon, std::size_t token_count) {
    std::vector<ConceptFactors> out;
    out.reserve(spans.size());
    for (const auto& span : spans) {
        const LexiconEntry* entry = lexicon.by_concept_id(span.concept_id);
        if (!entry)
            throw ValidationError("concept_factors: unknown concept id " + span.concept_id);
        ConceptFactors f;
        f.s = entry->type_priority;
        f.h = 1.0 / (1.0 + static_cast<double>(entry->taxonomy_depth));
        f.p = token_count == 0
                  ? 0.0
                  : 1.0 - static_cast<double>(span.start_token) / static_cast<double>(token_count);
        out.push_back(f);
    }
    return out;
}

std::vector<double> terminology_representation(const std::vector<double>& cls,
                                               const std::vector<std::vector<double>>& concepts,
                                               const std::vector<double>& alpha,
                                               const Matrix& w_g, const std::vector<double>& b_g) {
    if (concepts.size() != alpha.size())
        throw ValidationError("terminology_representation: alpha/concept count mismatch");
    std::vector<double> pooled(cls.size(), 0.0);
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        if (concepts[i].size() != cls.size())
            throw ValidationError("terminology_representation: concept dimension mismatch");
        for (std::size_t j = 0; j < pooled.size(); ++j)
            pooled[j] += alpha[i] * concepts[i][j];
    }
    std::vector<double> concat;
    concat.reserve(cls.size() * 2);
    concat.insert(concat.end(), cls.begin(), cls.end());
    concat.insert(concat.end(), pooled.begin(), pooled.end());
    return affine(w_g, concat, b_g);
}

std::vector<double> reasoning_structure_encoding(const PromptGenome& genome,
                                                 const ProjectionWeights& pw) {
    // Quality-weighted softmax over present component slots; absent slots are
    // excluded rather than given zero weight.
    std::vector<std::size_t> present;
    std::vector<double> logits;
    for (const auto& comp : genome.components) {
        if (comp.category.index >= pw.k)
            continue; // categories beyond the configured slots carry no embedding
        present.push_back(comp.category.index);
        logits.push_back(comp.quality);
    }
    std::vector<double> r(pw.k, 0.0);
    if (present.empty())
        return r;
    const double m = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    std::vector<double> w(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        w[i] = std::exp(logits[i] - m);
        total += w[i];
    }
    for (std::size_t i = 0; i < present.size(); ++i) {
        const double weight = w[i] / total;
        const auto& e = pw.reasoning_embeddings[present[i]];
        for (std::size_t j = 0; j < pw.k; ++j)
            r[j] += weight * e[j];
    }
    return r;
}

std::vector<double> final_representation(const std::vector<double>& z,
                                         const std::vector<double>& r,
                                         const ProjectionWeights& pw) {
    std::vector<double> concat;
    concat.reserve(z.size() + r.size());
    concat.insert(concat.end(), z.begin(), z.end());
    concat.insert(concat.end(), r.begin(), r.end());
    return affine(pw.w_f, concat, pw.b_f);
}

namespace {

Matrix parse_matrix(const json& arr, std::size_t rows, std::size_t cols, const std::string& name) {
    if (!arr.is_array() || arr.size() != rows)
        throw ValidationError("weights: " + name + " must have " + std::to_string(rows) +
                              " rows");
    Matrix m;
    m.rows = rows;
    m.cols = cols;
    m.data.reserve(rows * cols);
    for (const auto& row : arr) {
        if (!row.is_array() || row.size() != cols)
            throw ValidationError("weights: " + name + " rows must have " +
                                  std::to_string(cols) + " columns");
        for (const auto& x : row) {
            if (!x.is_number())
                throw ParseError("weights: " + name + " entries must be numbers");
            double v = x.get<double>();
            if (!std::isfinite(v))
                throw ValidationError("weights: " + name + " contains a non-finite entry");
            m.data.push_back(v);
        }
    }
    return m;
}

std::vector<double> parse_vector(const json& arr, std::size_t len, const std::string& name) {
    if (!arr.is_array() || arr.size() != len)
        throw ValidationError("weights: " + name + " must have length " + std::to_string(len));
    std::vector<double> v;
    v.reserve(len);
    for (const auto& x : arr) {
        if (!x.is_number())
            throw ParseError("weights: " + name + " entries must be numbers");
        double d = x.get<double>();
        if (!std::isfinite(d))
            throw ValidationError("weights: " + name + " contains a non-finite entry");
        v.push_back(d);
    }
    return v;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols; ++c)
            row.push_back(m.at(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

constexpr const char* kDimensionKeys[4] = {"clarity", "specificity", "relevance",
                                           "accuracy_risk"};

} // namespace

ModelWeights load_model_weights(std::string_view bytes) {
    json doc = parse_json(bytes, "weights");
    if (!doc.is_object() || !doc.contains("dims"))
        throw ParseError("weights: missing \"dims\" block");
    const json& dims = doc["dims"];
    ModelWeights w;
    auto dim_of = [&](const char* key) {
        double v = require_number(dims, key, "weights dims");
        if (v < 1.0)
            throw ValidationError(std::string("weights dims: ") + key + " must be >= 1");
        return static_cast<std::size_t>(v);
    };
    auto& pw = w.projection;
    pw.d = dim_of("d");
    pw.d_prime = dim_of("d_prime");
    pw.d_double_prime = dim_of("d_double_prime");
    pw.k = dim_of("k");
    w.hidden = dim_of("hidden");

    if (!doc.contains("attention"))
        throw ParseError("weights: missing \"attention\" block");
    const json& att = doc["attention"];
    w.attention.w_s = require_number(att, "w_s", "weights attention");
    w.attention.w_h = require_number(att, "w_h", "weights attention");
    w.attention.w_p = require_number(att, "w_p", "weights attention");

    if (!doc.contains("projection"))
        throw ParseError("weights: missing \"projection\" block");
    const json& proj = doc["projection"];
    pw.w_g = parse_matrix(proj.at("w_g"), pw.d_prime, 2 * pw.d, "w_g");
    pw.b_g = parse_vector(proj.at("b_g"), pw.d_prime, "b_g");
    pw.w_f = parse_matrix(proj.at("w_f"), pw.d_double_prime, pw.d_prime + pw.k, "w_f");
    pw.b_f = parse_vector(proj.at("b_f"), pw.d_double_prime, "b_f");
    if (!proj.contains("reasoning_embeddings") || !proj["reasoning_embeddings"].is_array() ||
        proj["reasoning_embeddings"].size() != pw.k)
        throw ValidationError("weights: reasoning_embeddings must list k vectors");
    for (const auto& e : proj["reasoning_embeddings"])
        pw.reasoning_embeddings.push_back(parse_vector(e, pw.k, "reasoning embedding"));

    if (!doc.contains("heads"))
        throw ParseError("weights: missing \"heads\" block");
    const json& heads = doc["heads"];
    for (int i = 0; i < 4; ++i) {
        if (!heads.contains(kDimensionKeys[i]))
            throw ParseError(std::string("weights: missing head \"") + kDimensionKeys[i] + "\"");
        const json& h = heads[kDimensionKeys[i]];
        QualityHead& head = w.heads[i];
        head.w1 = parse_matrix(h.at("w1"), w.hidden, pw.d_double_prime, "head w1");
        head.b1 = parse_vector(h.at("b1"), w.hidden, "head b1");
        head.ln_gain = parse_vector(h.at("ln_gain"), w.hidden, "head ln_gain");
        head.ln_bias = parse_vector(h.at("ln_bias"), w.hidden, "head ln_bias");
        head.w2 = parse_vector(h.at("w2"), w.hidden, "head w2");
        head.b2 = require_number(h, "b2", "weights head");
    }
    return w;
}

std::string serialize_model_weights(const ModelWeights& w) {
    json doc;
    const auto& pw = w.projection;
    doc["dims"] = {{"d", pw.d},
                   {"d_prime", pw.d_prime},
                   {"d_double_prime", pw.d_double_prime},
                   {"k", pw.k},
                   {"hidden", w.hidden}};
    doc["attention"] = {{"w_s", w.attention.w_s},
                        {"w_h", w.attention.w_h},
                        {"w_p", w.attention.w_p}};
    json proj;
    proj["w_g"] = matrix_to_json(pw.w_g);
    proj["b_g"] = pw.b_g;
    proj["w_f"] = matrix_to_json(pw.w_f);
    proj["b_f"] = pw.b_f;
    json emb = json::array();
    for (const auto& e : pw.reasoning_embeddings)
        emb.push_back(e);
    proj["reasoning_embeddings"] = std::move(emb);
    doc["projection"] = std::move(proj);
    json heads;
    for (int i = 0; i < 4; ++i) {
        const QualityHead& head = w.heads[i];
        json h;
        h["w1"] = matrix_to_json(head.w1);
        h["b1"] = head.b1;
        h["ln_gain"] = head.ln_gain;
        h["ln_bias"] = head.ln_bias;
        h["w2"] = head.w2;
        h["b2"] = head.b2;
        heads[kDimensionKeys[i]] = std::move(h);
    }
    doc["heads"] = std::move(heads);
    return doc.dump();
}

std::vector<double> genome_representation(const PromptGenome& genome,
                                          const EmbeddingProvider& provider,
                                          const Lexicon& lexicon, const ModelWeights& weights) {
    const std::string text = render_text(genome);
    EmbeddingResult emb = provider.embed(text);
    if (emb.matrix.dim != weights.projection.d)
        throw ValidationError("provider dimension does not match weights d");
    const auto spans = identify_concepts(emb.tokens, lexicon);
    std::vector<std::vector<double>> concepts;
    std::vector<double> alpha;
    if (!spans.empty()) {
        for (const auto& span : spans)
            concepts.push_back(concept_representation(emb.matrix, span));
        alpha = concept_attention(concept_factors(spans, lexicon, emb.tokens.size()),
                                  weights.attention);
    }
    const auto z = terminology_representation(emb.cls, concepts, alpha, weights.projection.w_g,
                                              weights.projection.b_g);
    const auto r = reasoning_structure_encoding(genome, weights.projection);
    return final_representation(z, r, weights.projection);
}

} // namespace medprompt
