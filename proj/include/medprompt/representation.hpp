#pragma once

#include "medprompt/embedding.hpp"
#include "medprompt/genome.hpp"
#include "medprompt/lexicon.hpp"

#include <string_view>
#include <vector>

namespace medprompt {

/// Dense row-major matrix for the projection weights.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

/// y = M x + b. Throws ValidationError on shape mismatch.
std::vector<double> affine(const Matrix& m, const std::vector<double>& x,
                           const std::vector<double>& b);

/// Weights of the three concept-importance factors.
struct AttentionFactorWeights {
    double w_s = 1.0;
    double w_h = 1.0;
    double w_p = 1.0;
};

/// Per-concept attention factors: semantic priority, hierarchy, position.
struct ConceptFactors {
    double s = 0.0; // type priority of the mapped concept
    double h = 0.0; // 1 / (1 + taxonomy depth)
    double p = 0.0; // 1 - start_token / token_count
};

/// Learned projections and reasoning-component embeddings, loaded from the
/// weights file. Shapes: w_g is d' x 2d, w_f is d'' x (d' + K), each
/// reasoning embedding has length K.
struct ProjectionWeights {
    std::size_t d = 0;
    std::size_t d_prime = 0;
    std::size_t d_double_prime = 0;
    std::size_t k = 0;
    Matrix w_g;
    std::vector<double> b_g;
    Matrix w_f;
    std::vector<double> b_f;
    std::vector<std::vector<double>> reasoning_embeddings; // K vectors of length K
};

/// Softmax of w_s*s + w_h*h + w_p*p over the concepts. Weights sum to one
/// and every entry is positive. Throws ValidationError when `factors` is empty.
std::vector<double> concept_attention(const std::vector<ConceptFactors>& factors,
                                      const AttentionFactorWeights& fw);

/// Arithmetic mean of the token rows spanned by `span`.
std::vector<double> concept_representation(const TokenMatrix& matrix, const ConceptSpan& span);

/// Factors for each span, derived from the lexicon entry and span position.
std::vector<ConceptFactors> concept_factors(const std::vector<ConceptSpan>& spans,
                                            const Lexicon& lexicon, std::size_t token_count);

/// z = W_g [cls; sum_i alpha_i m_i] + b_g. With no concepts the pooled
/// concept block is the zero vector.
std::vector<double> terminology_representation(const std::vector<double>& cls,
                                               const std::vector<std::vector<double>>& concepts,
                                               const std::vector<double>& alpha,
                                               const Matrix& w_g, const std::vector<double>& b_g);

/// r = sum over present categories of softmax(quality) * e_j; zero vector
/// when the genome has no components in the first K categories.
std::vector<double> reasoning_structure_encoding(const PromptGenome& genome,
                                                 const ProjectionWeights& pw);

/// z_final = W_f [z; r] + b_f.
std::vector<double> final_representation(const std::vector<double>& z,
                                         const std::vector<double>& r,
                                         const ProjectionWeights& pw);

/// Full weights file: dims, attention factor weights, projections, and the
/// four quality heads (declared in assessment.hpp; stored here as raw JSON
/// is avoided -- the loader returns both pieces).
struct QualityHead {
    Matrix w1;                     // hidden x d''
    std::vector<double> b1;        // hidden
    std::vector<double> ln_gain;   // hidden
    std::vector<double> ln_bias;   // hidden
    std::vector<double> w2;        // hidden (row vector)
    double b2 = 0.0;
};

struct ModelWeights {
    ProjectionWeights projection;
    AttentionFactorWeights attention;
    std::size_t hidden = 0;
    QualityHead heads[4]; // indexed by Dimension order
};

/// Load and shape-check a weights file. Throws ParseError / ValidationError.
ModelWeights load_model_weights(std::string_view bytes);

/// Serialize weights to the file format (used by the generator tool).
std::string serialize_model_weights(const ModelWeights& w);

/// Compute z_final for a genome text using the given provider, lexicon and
/// weights. This is the inference path feeding the quality heads.
std::vector<double> genome_representation(const PromptGenome& genome,
                                          const EmbeddingProvider& provider,
                                          const Lexicon& lexicon, const ModelWeights& weights);

} // namespace medprompt
