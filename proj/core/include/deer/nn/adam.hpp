#pragma once

#include <cstdint>
#include <vector>

#include "deer/nn/tensor.hpp"

namespace deer::nn {

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    std::vector<Vector> first_moment;
    std::vector<Vector> second_moment;
};

/// One bias-corrected Adam step. Moments are created on the first call and
/// must keep matching the parameter shapes afterwards.
void adam_update(const ParamList& params, const ParamList& grads, AdamState& state);

}  // namespace deer::nn
