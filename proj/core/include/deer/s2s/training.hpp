#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "deer/data/samples.hpp"
#include "deer/s2s/model.hpp"

namespace deer::s2s {

/// A rectangular mini-batch: every column shares the same delay. All
/// entries are normalized.
struct Batch {
    int delay = 0;
    Matrix anchor;                // [S x B]
    std::vector<Matrix> actions;  // delay x [A x B]
    std::vector<Matrix> labels;   // delay x [S x B]

    int size() const { return static_cast<int>(anchor.cols()); }
};

/// All refs must share one delay.
Batch make_batch(const Seq2SeqModel& model, const data::TrajectoryStore& store, std::span<const data::SampleRef> refs);
Batch make_batch(const Seq2SeqModel& model, const data::TrainingSample& sample);

/// Row i (i >= 1) holds, per sample, 1 when decoder step i+1 is fed the
/// model's previous prediction and 0 when it is fed the ground truth. Row 0
/// is unused (step 1 always sees the zero state).
Matrix draw_feed_mask(int delay, int batch, double p, nn::Rng& rng);

struct Tape;

struct ForwardResult {
    double loss = 0.0;                // masked MSE, normalized units
    std::vector<Matrix> predictions;  // delay x [S x B], normalized
};

ForwardResult forward(const Seq2SeqModel& model, const Batch& batch, const Matrix& feed_mask, Tape* tape = nullptr);

/// Loss plus gradients accumulated into `grad` (a zeros_like of `model`).
/// Throws nn::NonFiniteError when the loss is not finite.
double loss_and_gradient(const Seq2SeqModel& model, const Batch& batch, const Matrix& feed_mask, Seq2SeqModel& grad);

/// Single-sample decode with teacher forcing drawn from `rng`. Predicted
/// states are in raw units; the loss is in normalized units.
std::pair<std::vector<Vector>, double> decode_train(const Seq2SeqModel& model, const data::TrainingSample& sample,
                                                    nn::Rng& rng);

/// Index groups of at most `batch_size`, each within a single delay, in
/// seeded random order.
std::vector<std::vector<std::size_t>> make_batches(std::span<const data::SampleRef> refs, int batch_size, nn::Rng& rng);

struct PretrainConfig {
    int epochs = 10;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double final_lr_fraction = 0.1;  // cosine decay to this fraction of learning_rate; 1 keeps it constant
    double grad_clip = 5.0;        // global-norm clip, <= 0 disables
    int max_batches_per_epoch = 0; // 0 = all
    std::uint64_t seed = 0;
};

struct PretrainResult {
    std::vector<double> train_curve;  // mean training loss per epoch
    std::vector<double> test_curve;   // autoregressive test loss per epoch
};

/// Mini-batch Adam on the masked MSE. The model is marked trained (frozen
/// for downstream use) on return. `progress`, when set, is called after
/// each epoch with (epoch, train loss, test loss).
PretrainResult pretrain(Seq2SeqModel& model, const data::TrajectoryStore& store,
                        std::span<const data::SampleRef> train, std::span<const data::SampleRef> test,
                        const PretrainConfig& cfg,
                        const std::function<void(int, double, double)>& progress = {});

/// Mean autoregressive (p = 1) loss in normalized units.
double evaluate(const Seq2SeqModel& model, const data::TrajectoryStore& store, std::span<const data::SampleRef> refs,
                int batch_size = 512);

/// Autoregressive MSE per state dimension in raw units, averaged over every
/// real (unmasked) predicted step.
Vector raw_mse_per_dimension(const Seq2SeqModel& model, const data::TrajectoryStore& store,
                             std::span<const data::SampleRef> refs, int batch_size = 512);

}  // namespace deer::s2s
