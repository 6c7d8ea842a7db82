#pragma once

#include <span>
#include <vector>

#include "deer/nn/tensor.hpp"

namespace deer::nn {

// Scaled dot-product attention: score_j = <q, h_j> / sqrt(K), weights =
// softmax(score), context = sum_j weights_j h_j. Parameter-free.

struct AttentionResult {
    Vector context;
    Vector weights;
};

AttentionResult attention(std::span<const Vector> encoder_states, const Vector& query);

/// Batched form. `states[j]` is [K x B] (state j for each sample), `query`
/// is [K x B]. Writes the [L x B] weight matrix to `weights` when non-null.
Matrix attention_batch(const std::vector<Matrix>& states, const Matrix& query, Matrix* weights = nullptr);

/// Accumulates into `dstates` (same layout as `states`) and `dquery`.
void attention_backward(const std::vector<Matrix>& states, const Matrix& query, const Matrix& weights,
                        const Matrix& dcontext, std::vector<Matrix>& dstates, Matrix& dquery);

}  // namespace deer::nn
