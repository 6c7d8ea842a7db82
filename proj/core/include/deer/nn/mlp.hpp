#pragma once

#include <string_view>
#include <vector>

#include "deer/nn/dense.hpp"

namespace deer::nn {

/// Stack of dense layers; hidden layers use `hidden_activation`, the last
/// layer is linear.
struct Mlp {
    std::vector<DenseLayer> layers;

    struct Cache {
        std::vector<Matrix> activations;  // activations[0] is the input
    };

    static Mlp random(Index in, const std::vector<int>& hidden, Index out, Activation hidden_activation, Rng& rng);
    Mlp zeros_like() const;

    Index in_dim() const { return layers.front().in_dim(); }
    Index out_dim() const { return layers.back().out_dim(); }

    Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
    /// Returns dL/dx; accumulates into `grad`. Pass nullptr to only
    /// propagate to the input.
    Matrix backward(const Cache& cache, const Matrix& dy, Mlp* grad) const;

    void collect(std::string_view prefix, ParamList& out);
    /// target <- (1 - tau) * target + tau * source
    static void polyak(const Mlp& source, Mlp& target, double tau);
};

}  // namespace deer::nn
