#pragma once

#include <string_view>

#include "deer/nn/activation.hpp"
#include "deer/nn/tensor.hpp"

namespace deer::nn {

/// Fully connected layer y = act(W x + b). Batched inputs are column-major:
/// one sample per column.
struct DenseLayer {
    Matrix weight;  // [out x in]
    Vector bias;    // [out]
    Activation activation = Activation::identity;

    static DenseLayer zeros(Index in, Index out, Activation act);
    /// uniform(-1/sqrt(in), 1/sqrt(in)) for both weight and bias.
    static DenseLayer random(Index in, Index out, Activation act, Rng& rng);

    DenseLayer zeros_like() const { return zeros(in_dim(), out_dim(), activation); }

    Index in_dim() const { return weight.cols(); }
    Index out_dim() const { return weight.rows(); }

    Vector forward(const Vector& x) const;
    Matrix forward_batch(const Matrix& x) const;

    /// Accumulates parameter gradients into `grad` and returns dL/dx.
    /// `x` and `y` are the input and output of the matching forward call.
    Matrix backward(const Matrix& x, const Matrix& y, const Matrix& dy, DenseLayer& grad) const;

    void collect(std::string_view prefix, ParamList& out);
};

/// Free-function form of DenseLayer::forward.
inline Vector dense_forward(const DenseLayer& layer, const Vector& x) { return layer.forward(x); }

}  // namespace deer::nn
