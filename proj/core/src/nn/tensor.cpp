#include "deer/nn/tensor.hpp"

namespace deer::nn {

void fill_uniform(Matrix& m, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

void fill_uniform(Vector& v, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
}

double squared_norm(const ParamList& list) {
    double acc = 0.0;
    for (const auto& p : list)
        for (double x : p.values) acc += x * x;
    return acc;
}

void zero(const ParamList& list) {
    for (const auto& p : list) std::fill(p.values.begin(), p.values.end(), 0.0);
}

}  // namespace deer::nn
