#include "deer/nn/gru.hpp"

#include <cmath>

namespace deer::nn {

namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

}  // namespace

GruCell GruCell::zeros(Index in, Index hidden) {
    return GruCell{Matrix::Zero(3 * hidden, in), Matrix::Zero(3 * hidden, hidden), Vector::Zero(3 * hidden)};
}

GruCell GruCell::random(Index in, Index hidden, Rng& rng) {
    GruCell cell = zeros(in, hidden);
    // Every block shares the PyTorch-style bound 1/sqrt(hidden).
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    fill_uniform(cell.input_weight, bound, rng);
    fill_uniform(cell.hidden_weight, bound, rng);
    fill_uniform(cell.bias, bound, rng);
    return cell;
}

Vector GruCell::step(const Vector& x, const Vector& h_prev) const {
    Matrix out = step_batch(x, h_prev, nullptr);
    return out.col(0);
}

Matrix GruCell::step_batch(const Matrix& x, const Matrix& h_prev, Cache* cache) const {
    const Index k = hidden_dim();
    require_shape(x.rows() == input_dim(), "gru_step: input has " + std::to_string(x.rows()) + " rows, cell expects " +
                                               std::to_string(input_dim()));
    require_shape(h_prev.rows() == k, "gru_step: hidden state has " + std::to_string(h_prev.rows()) +
                                          " rows, cell expects " + std::to_string(k));
    require_shape(x.cols() == h_prev.cols(), "gru_step: batch size mismatch between input and hidden state");

    Matrix gi = input_weight * x;
    gi.colwise() += bias;
    const Matrix gh = hidden_weight * h_prev;

    Matrix reset = sigmoid(gi.topRows(k) + gh.topRows(k));
    Matrix update = sigmoid(gi.middleRows(k, k) + gh.middleRows(k, k));
    Matrix hidden_candidate = gh.bottomRows(k);
    Matrix candidate = (gi.bottomRows(k).array() + reset.array() * hidden_candidate.array()).tanh().matrix();
    Matrix h = ((1.0 - update.array()) * candidate.array() + update.array() * h_prev.array()).matrix();

    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->reset = std::move(reset);
        cache->update = std::move(update);
        cache->candidate = std::move(candidate);
        cache->hidden_candidate = std::move(hidden_candidate);
    }
    return h;
}

std::pair<Matrix, Matrix> GruCell::backward(const Cache& c, const Matrix& dh, GruCell& grad) const {
    const Index k = hidden_dim();
    const Index batch = dh.cols();
    require_shape(dh.rows() == k && batch == c.x.cols(), "gru backward: gradient shape mismatch");

    const auto r = c.reset.array();
    const auto u = c.update.array();
    const auto n = c.candidate.array();

    const Eigen::ArrayXXd dn_pre = dh.array() * (1.0 - u) * (1.0 - n.square());
    const Eigen::ArrayXXd du_pre = dh.array() * (c.h_prev.array() - n) * u * (1.0 - u);
    const Eigen::ArrayXXd dr_pre = dn_pre * c.hidden_candidate.array() * r * (1.0 - r);

    Matrix d_input_gates(3 * k, batch);
    d_input_gates.topRows(k) = dr_pre.matrix();
    d_input_gates.middleRows(k, k) = du_pre.matrix();
    d_input_gates.bottomRows(k) = dn_pre.matrix();

    Matrix d_hidden_gates = d_input_gates;
    d_hidden_gates.bottomRows(k) = (dn_pre * r).matrix();

    grad.input_weight.noalias() += d_input_gates * c.x.transpose();
    grad.hidden_weight.noalias() += d_hidden_gates * c.h_prev.transpose();
    grad.bias += d_input_gates.rowwise().sum();

    Matrix dx = input_weight.transpose() * d_input_gates;
    Matrix dh_prev = (dh.array() * u).matrix();
    dh_prev.noalias() += hidden_weight.transpose() * d_hidden_gates;
    return {std::move(dx), std::move(dh_prev)};
}

void GruCell::collect(std::string_view prefix, ParamList& out) {
    out.push_back(make_span(join_name(prefix, "input_weight"), input_weight));
    out.push_back(make_span(join_name(prefix, "hidden_weight"), hidden_weight));
    out.push_back(make_span(join_name(prefix, "bias"), bias));
}

}  // namespace deer::nn
