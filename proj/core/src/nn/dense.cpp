#include "deer/nn/dense.hpp"

#include <cmath>

namespace deer::nn {

DenseLayer DenseLayer::zeros(Index in, Index out, Activation act) {
    return DenseLayer{Matrix::Zero(out, in), Vector::Zero(out), act};
}

DenseLayer DenseLayer::random(Index in, Index out, Activation act, Rng& rng) {
    DenseLayer layer = zeros(in, out, act);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    fill_uniform(layer.weight, bound, rng);
    fill_uniform(layer.bias, bound, rng);
    return layer;
}

Vector DenseLayer::forward(const Vector& x) const {
    require_shape(x.size() == in_dim(), "dense_forward: input has length " + std::to_string(x.size()) +
                                            ", layer expects " + std::to_string(in_dim()));
    Matrix z = weight * x + bias;
    return apply(activation, z);
}

Matrix DenseLayer::forward_batch(const Matrix& x) const {
    require_shape(x.rows() == in_dim(), "dense_forward: input has " + std::to_string(x.rows()) +
                                            " rows, layer expects " + std::to_string(in_dim()));
    Matrix z = weight * x;
    z.colwise() += bias;
    return apply(activation, z);
}

Matrix DenseLayer::backward(const Matrix& x, const Matrix& y, const Matrix& dy, DenseLayer& grad) const {
    require_shape(dy.rows() == out_dim() && dy.cols() == x.cols(), "dense backward: gradient shape mismatch");
    const Matrix dz = apply_derivative(activation, y, dy);
    grad.weight.noalias() += dz * x.transpose();
    grad.bias += dz.rowwise().sum();
    return weight.transpose() * dz;
}

void DenseLayer::collect(std::string_view prefix, ParamList& out) {
    out.push_back(make_span(join_name(prefix, "weight"), weight));
    out.push_back(make_span(join_name(prefix, "bias"), bias));
}

}  // namespace deer::nn
