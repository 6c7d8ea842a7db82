#pragma once

#include "deer/nn/tensor.hpp"

namespace deer::envs {

struct LqrSolution {
    nn::Matrix gain;  // u = -K x
    nn::Matrix cost_to_go;
    int iterations = 0;
};

/// Infinite-horizon discrete LQR via the structured doubling algorithm.
/// Throws if the iteration fails to converge.
LqrSolution solve_lqr(const nn::Matrix& a, const nn::Matrix& b, const nn::Matrix& q, const nn::Matrix& r,
                      double tol = 1e-12, int max_iterations = 200);

}  // namespace deer::envs
