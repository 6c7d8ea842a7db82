#include "deer/nn/adam.hpp"

#include <cmath>

namespace deer::nn {

void adam_update(const ParamList& params, const ParamList& grads, AdamState& state) {
    require_shape(params.size() == grads.size(), "adam_update: parameter and gradient lists differ in length");
    for (std::size_t i = 0; i < params.size(); ++i)
        require_shape(params[i].values.size() == grads[i].values.size(),
                      "adam_update: shape mismatch for parameter '" + params[i].name + "'");

    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.push_back(Vector::Zero(static_cast<Index>(p.values.size())));
            state.second_moment.push_back(Vector::Zero(static_cast<Index>(p.values.size())));
        }
    }
    require_shape(state.first_moment.size() == params.size(), "adam_update: optimizer state has different arity");

    ++state.step;
    const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const double step_size = state.learning_rate / bias1;
    const double sqrt_bias2 = std::sqrt(bias2);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        require_shape(m.size() == static_cast<Index>(params[i].values.size()),
                      "adam_update: moment shape mismatch for parameter '" + params[i].name + "'");
        const auto& g = grads[i].values;
        auto& p = params[i].values;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const auto jj = static_cast<Index>(j);
            m[jj] = state.beta1 * m[jj] + (1.0 - state.beta1) * g[j];
            v[jj] = state.beta2 * v[jj] + (1.0 - state.beta2) * g[j] * g[j];
            p[j] -= step_size * m[jj] / (std::sqrt(v[jj]) / sqrt_bias2 + state.epsilon);
        }
    }
}

}  // namespace deer::nn
