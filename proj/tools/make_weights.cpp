// Generates a weights file from a fixed seed. The repository's default
// weights file (data/weights_default.json) was produced by:
//   medprompt-make-weights --seed 2024 --out data/weights_default.json

#include "medprompt/representation.hpp"
#include "medprompt/rng.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>

namespace {

using medprompt::Matrix;
using medprompt::ModelWeights;
using medprompt::Rng;

// Box-Muller on the portable uniform stream; std::normal_distribution is
// implementation-defined and would make the file depend on the stdlib.
double normal(Rng& rng) {
    double u1 = rng.uniform01();
    while (u1 <= 1e-12)
        u1 = rng.uniform01();
    const double u2 = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

double rounded(double v) { return std::round(v * 1e6) / 1e6; }

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m;
    m.rows = rows;
    m.cols = cols;
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    m.data.reserve(rows * cols);
    for (std::size_t i = 0; i < rows * cols; ++i)
        m.data.push_back(rounded(normal(rng) * scale));
    return m;
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double scale) {
    std::vector<double> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        v.push_back(rounded(normal(rng) * scale));
    return v;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate a seeded weights file"};
    std::uint64_t seed = 2024;
    std::string out_path = "weights.json";
    std::size_t d = 64;
    std::size_t d_prime = 32;
    std::size_t d_double_prime = 32;
    std::size_t k = 5;
    std::size_t hidden = 512;
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--out", out_path, "output path")->required();
    app.add_option("--d", d, "embedding dimension");
    app.add_option("--d-prime", d_prime, "terminology projection dimension");
    app.add_option("--d-double-prime", d_double_prime, "final representation dimension");
    app.add_option("--k", k, "reasoning component count");
    app.add_option("--hidden", hidden, "quality head hidden dimension");
    CLI11_PARSE(app, argc, argv);

    Rng rng(seed);
    ModelWeights w;
    w.projection.d = d;
    w.projection.d_prime = d_prime;
    w.projection.d_double_prime = d_double_prime;
    w.projection.k = k;
    w.hidden = hidden;
    w.attention.w_s = 1.0;
    w.attention.w_h = 0.5;
    w.attention.w_p = 0.25;
    w.projection.w_g = random_matrix(rng, d_prime, 2 * d);
    w.projection.b_g = random_vector(rng, d_prime, 0.01);
    w.projection.w_f = random_matrix(rng, d_double_prime, d_prime + k);
    w.projection.b_f = random_vector(rng, d_double_prime, 0.01);
    for (std::size_t j = 0; j < k; ++j)
        w.projection.reasoning_embeddings.push_back(random_vector(rng, k, 1.0));
    for (int i = 0; i < 4; ++i) {
        auto& head = w.heads[i];
        head.w1 = random_matrix(rng, hidden, d_double_prime);
        head.b1 = random_vector(rng, hidden, 0.01);
        head.ln_gain.assign(hidden, 1.0);
        head.ln_bias.assign(hidden, 0.0);
        head.w2 = random_vector(rng, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
        head.b2 = 0.0;
    }

    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write " << out_path << "\n";
        return 1;
    }
    out << medprompt::serialize_model_weights(w);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}
