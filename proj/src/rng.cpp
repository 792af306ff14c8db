#include "medprompt/rng.hpp"

#include "medprompt/errors.hpp"

#include <numeric>
#include <sstream>

namespace medprompt {

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n)
        throw ValidationError("sample_without_replacement: k exceeds n");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + index(n - i);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

std::size_t Rng::pick_weighted(std::span<const double> weights) {
    if (weights.empty())
        throw ValidationError("pick_weighted: empty weight list");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0)
            throw ValidationError("pick_weighted: negative weight");
        total += w;
    }
    if (total <= 0.0)
        return index(weights.size());
    const double u = uniform01() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (u < cum)
            return i;
    }
    // u == total can only happen through rounding; last positive weight wins.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0)
            return i;
    return weights.size() - 1;
}

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (is.fail())
        throw ParseError("Rng::set_state: malformed engine state");
}

} // namespace medprompt
