#include "deer/nn/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace deer::nn {

AttentionResult attention(std::span<const Vector> encoder_states, const Vector& query) {
    if (encoder_states.empty()) throw std::invalid_argument("attention: empty encoder state list");
    std::vector<Matrix> states;
    states.reserve(encoder_states.size());
    for (const auto& h : encoder_states) states.emplace_back(h);
    Matrix weights;
    Matrix context = attention_batch(states, query, &weights);
    return {context.col(0), weights.col(0)};
}

Matrix attention_batch(const std::vector<Matrix>& states, const Matrix& query, Matrix* weights_out) {
    if (states.empty()) throw std::invalid_argument("attention: empty encoder state list");
    const Index k = query.rows();
    const Index batch = query.cols();
    for (const auto& h : states)
        require_shape(h.rows() == k && h.cols() == batch, "attention: encoder state and query shapes differ");

    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    const Index len = static_cast<Index>(states.size());
    Matrix scores(len, batch);
    for (Index j = 0; j < len; ++j)
        scores.row(j) = (states[j].array() * query.array()).colwise().sum().matrix() * scale;

    // Column-wise softmax, shifted by the column max.
    const Eigen::RowVectorXd col_max = scores.colwise().maxCoeff();
    Matrix weights = (scores.rowwise() - col_max).array().exp().matrix();
    const Eigen::RowVectorXd col_sum = weights.colwise().sum();
    weights.array().rowwise() /= col_sum.array();

    Matrix context = Matrix::Zero(k, batch);
    for (Index j = 0; j < len; ++j) context.array() += states[j].array().rowwise() * weights.row(j).array();

    if (weights_out) *weights_out = std::move(weights);
    return context;
}

void attention_backward(const std::vector<Matrix>& states, const Matrix& query, const Matrix& weights,
                        const Matrix& dcontext, std::vector<Matrix>& dstates, Matrix& dquery) {
    const Index k = query.rows();
    const Index len = static_cast<Index>(states.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    require_shape(dstates.size() == states.size(), "attention backward: dstates size mismatch");

    // dL/dw_j = <dcontext, h_j>
    Matrix dweights(len, query.cols());
    for (Index j = 0; j < len; ++j) dweights.row(j) = (dcontext.array() * states[j].array()).colwise().sum().matrix();

    const Eigen::RowVectorXd weighted = (weights.array() * dweights.array()).colwise().sum();
    const Matrix dscores = (weights.array() * (dweights.rowwise() - weighted).array()).matrix();

    for (Index j = 0; j < len; ++j) {
        dstates[j].array() += dcontext.array().rowwise() * weights.row(j).array();
        dstates[j].array() += query.array().rowwise() * (dscores.row(j).array() * scale);
        dquery.array() += states[j].array().rowwise() * (dscores.row(j).array() * scale);
    }
}

}  // namespace deer::nn
