#pragma once

#include <string_view>
#include <utility>

#include "deer/nn/tensor.hpp"

namespace deer::nn {

/// Single-layer GRU cell with hidden size K.
///
/// Row blocks of every parameter are ordered (reset, update, candidate):
///
///   r  = sigmoid(Wi_r x + Wh_r h + b_r)
///   u  = sigmoid(Wi_u x + Wh_u h + b_u)
///   n  = tanh(Wi_n x + b_n + r * (Wh_n h))
///   h' = (1 - u) * n + u * h
struct GruCell {
    Matrix input_weight;   // [3K x in]
    Matrix hidden_weight;  // [3K x K]
    Vector bias;           // [3K]

    struct Cache {
        Matrix x;
        Matrix h_prev;
        Matrix reset;
        Matrix update;
        Matrix candidate;
        Matrix hidden_candidate;  // Wh_n h, before gating by r
    };

    static GruCell zeros(Index in, Index hidden);
    static GruCell random(Index in, Index hidden, Rng& rng);
    GruCell zeros_like() const { return zeros(input_dim(), hidden_dim()); }

    Index input_dim() const { return input_weight.cols(); }
    Index hidden_dim() const { return hidden_weight.cols(); }

    Vector step(const Vector& x, const Vector& h_prev) const;
    Matrix step_batch(const Matrix& x, const Matrix& h_prev, Cache* cache = nullptr) const;

    /// Returns {dL/dx, dL/dh_prev}; accumulates parameter gradients into `grad`.
    std::pair<Matrix, Matrix> backward(const Cache& cache, const Matrix& dh, GruCell& grad) const;

    void collect(std::string_view prefix, ParamList& out);
};

inline Vector gru_step(const GruCell& cell, const Vector& x, const Vector& h_prev) {
    return cell.step(x, h_prev);
}

}  // namespace deer::nn
