#include "deer/s2s/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>
#include <sstream>

#include "deer/nn/adam.hpp"
#include "deer/nn/attention.hpp"
#include "passes.hpp"

namespace deer::s2s {

struct Tape {
    detail::EncoderTape encoder;
    std::vector<Matrix> encoder_states;
    std::vector<detail::DecoderStep> decoder;
};

namespace {

void check_batch(const Seq2SeqModel& model, const Batch& batch) {
    if (batch.delay < 1 || batch.delay > model.config.max_delay)
        throw nn::ShapeError("seq2seq batch: delay outside [1, D]");
    if (static_cast<int>(batch.actions.size()) != batch.delay || static_cast<int>(batch.labels.size()) != batch.delay)
        throw nn::ShapeError("seq2seq batch: action/label blocks do not match the delay");
}

double masked_mse(const std::vector<Matrix>& predictions, const std::vector<Matrix>& labels) {
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        sum += (predictions[i] - labels[i]).squaredNorm();
        count += static_cast<double>(predictions[i].size());
    }
    return sum / count;
}

std::map<int, std::vector<std::size_t>> group_by_delay(std::span<const data::SampleRef> refs) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < refs.size(); ++i) groups[refs[i].delay].push_back(i);
    return groups;
}

template <typename Fn>
void for_each_eval_batch(const Seq2SeqModel& model, const data::TrajectoryStore& store,
                         std::span<const data::SampleRef> refs, int batch_size, Fn&& fn) {
    for (const auto& [delay, idx] : group_by_delay(refs)) {
        for (std::size_t off = 0; off < idx.size(); off += static_cast<std::size_t>(batch_size)) {
            const auto end = std::min(idx.size(), off + static_cast<std::size_t>(batch_size));
            std::vector<data::SampleRef> chunk;
            for (std::size_t k = off; k < end; ++k) chunk.push_back(refs[idx[k]]);
            const Batch batch = make_batch(model, store, chunk);
            const Matrix feed = Matrix::Ones(batch.delay, batch.size());
            fn(batch, forward(model, batch, feed));
        }
    }
}

}  // namespace

Batch make_batch(const Seq2SeqModel& model, const data::TrajectoryStore& store, std::span<const data::SampleRef> refs) {
    if (refs.empty()) throw std::invalid_argument("make_batch: empty reference list");
    const int delay = refs.front().delay;
    const auto b = static_cast<nn::Index>(refs.size());
    const int s = model.config.state_dim;
    const int a = model.config.action_dim;

    Batch batch;
    batch.delay = delay;
    Matrix anchor(s, b);
    std::vector<Matrix> actions(static_cast<std::size_t>(delay), Matrix(a, b));
    std::vector<Matrix> labels(static_cast<std::size_t>(delay), Matrix(s, b));
    for (nn::Index col = 0; col < b; ++col) {
        const auto& ref = refs[static_cast<std::size_t>(col)];
        if (ref.delay != delay) throw std::invalid_argument("make_batch: mixed delays in one batch");
        const auto& steps = store.trajectories.at(ref.trajectory).steps;
        if (ref.start + ref.delay > steps.size()) throw std::out_of_range("make_batch: reference outside trajectory");
        anchor.col(col) = steps[ref.start].state;
        for (int k = 0; k < delay; ++k) {
            const auto& st = steps[ref.start + static_cast<std::size_t>(k)];
            actions[static_cast<std::size_t>(k)].col(col) = st.action;
            labels[static_cast<std::size_t>(k)].col(col) = st.next_state;
        }
    }
    batch.anchor = model.normalizer.state(anchor);
    for (auto& m : actions) batch.actions.push_back(model.normalizer.action(m));
    for (auto& m : labels) batch.labels.push_back(model.normalizer.state(m));
    return batch;
}

Batch make_batch(const Seq2SeqModel& model, const data::TrainingSample& sample) {
    Batch batch;
    batch.delay = sample.delay;
    batch.anchor = model.normalizer.state(sample.anchor_state);
    for (int k = 0; k < sample.delay; ++k) {
        batch.actions.push_back(model.normalizer.action(sample.actions.at(static_cast<std::size_t>(k))));
        batch.labels.push_back(model.normalizer.state(sample.labels.at(static_cast<std::size_t>(k))));
    }
    return batch;
}

Matrix draw_feed_mask(int delay, int batch, double p, nn::Rng& rng) {
    Matrix mask = Matrix::Zero(delay, batch);
    std::bernoulli_distribution coin(p);
    for (int i = 1; i < delay; ++i)
        for (int b = 0; b < batch; ++b) mask(i, b) = coin(rng) ? 1.0 : 0.0;
    return mask;
}

ForwardResult forward(const Seq2SeqModel& model, const Batch& batch, const Matrix& feed_mask, Tape* tape) {
    check_batch(model, batch);
    if (feed_mask.rows() != batch.delay || feed_mask.cols() != batch.size())
        throw nn::ShapeError("seq2seq forward: feed mask must be [delay x batch]");
    auto states = detail::run_encoder(model, batch.anchor, batch.actions, tape ? &tape->encoder : nullptr);
    ForwardResult out;
    out.predictions = detail::run_decoder(model, states, batch.labels, feed_mask, batch.delay,
                                          tape ? &tape->decoder : nullptr);
    out.loss = masked_mse(out.predictions, batch.labels);
    if (tape) tape->encoder_states = std::move(states);
    return out;
}

double loss_and_gradient(const Seq2SeqModel& model, const Batch& batch, const Matrix& feed_mask, Seq2SeqModel& grad) {
    Tape tape;
    const auto fwd = forward(model, batch, feed_mask, &tape);
    if (!std::isfinite(fwd.loss)) throw nn::NonFiniteError("seq2seq loss is not finite");

    const int d = batch.delay;
    const auto b = batch.size();
    const int k1 = model.config.hidden;
    const int k2 = model.config.embed;
    const double scale = 2.0 / static_cast<double>(d * model.config.state_dim * b);

    std::vector<Matrix> d_states(static_cast<std::size_t>(d + 1), Matrix::Zero(k1, b));
    Matrix d_hidden_carry = Matrix::Zero(k1, b);
    Matrix d_pred_carry = Matrix::Zero(model.config.state_dim, b);

    for (int i = d; i >= 1; --i) {
        const auto& step = tape.decoder[static_cast<std::size_t>(i - 1)];
        const Matrix d_pred = scale * (step.prediction - batch.labels[static_cast<std::size_t>(i - 1)]) + d_pred_carry;

        const Matrix d_head = model.output_head.backward(step.head_input, step.prediction, d_pred, grad.output_head);
        const Matrix d_hidden = d_head.topRows(k1) + d_hidden_carry;
        Matrix d_context = d_head.bottomRows(k1);

        auto [d_gru_input, d_hidden_prev] = model.decoder_gru.backward(step.gru, d_hidden, grad.decoder_gru);
        d_context += d_gru_input.bottomRows(k1);
        const Matrix d_input_state =
            model.decoder_embed.backward(step.input_state, step.embedding, d_gru_input.topRows(k2), grad.decoder_embed);
        if (i >= 2) {
            d_pred_carry = (d_input_state.array().rowwise() * feed_mask.row(i - 1).array()).matrix();
        } else {
            d_pred_carry.setZero();
        }

        Matrix d_query = Matrix::Zero(k1, b);
        nn::attention_backward(tape.encoder_states, step.query, step.weights, d_context, d_states, d_query);
        d_hidden_carry = d_hidden_prev + d_query;
    }
    // The decoder starts from hb_0 = h_{d+1}.
    d_states.back() += d_hidden_carry;

    Matrix dh = d_states.back();
    for (int k = d; k >= 1; --k) {
        auto [dx, dh_prev] = model.encoder_gru.backward(tape.encoder.gru[static_cast<std::size_t>(k)], dh, grad.encoder_gru);
        model.action_embed.backward(tape.encoder.actions[static_cast<std::size_t>(k - 1)],
                                    tape.encoder.action_embeddings[static_cast<std::size_t>(k - 1)], dx,
                                    grad.action_embed);
        dh = dh_prev + d_states[static_cast<std::size_t>(k - 1)];
    }
    auto [dx0, unused] = model.encoder_gru.backward(tape.encoder.gru[0], dh, grad.encoder_gru);
    model.state_embed.backward(tape.encoder.anchor, tape.encoder.state_embedding, dx0, grad.state_embed);
    return fwd.loss;
}

std::pair<std::vector<Vector>, double> decode_train(const Seq2SeqModel& model, const data::TrainingSample& sample,
                                                    nn::Rng& rng) {
    const Batch batch = make_batch(model, sample);
    const Matrix feed = draw_feed_mask(batch.delay, 1, model.config.teacher_forcing, rng);
    const auto fwd = forward(model, batch, feed);
    std::vector<Vector> states;
    for (const auto& p : fwd.predictions) states.push_back(model.normalizer.unstate(p).col(0));
    return {std::move(states), fwd.loss};
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const data::SampleRef> refs, int batch_size, nn::Rng& rng) {
    if (batch_size < 1) throw std::invalid_argument("make_batches: batch size must be >= 1");
    std::vector<std::vector<std::size_t>> batches;
    for (auto& [delay, idx] : group_by_delay(refs)) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t off = 0; off < idx.size(); off += static_cast<std::size_t>(batch_size)) {
            const auto end = std::min(idx.size(), off + static_cast<std::size_t>(batch_size));
            batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(off),
                                 idx.begin() + static_cast<std::ptrdiff_t>(end));
        }
    }
    std::shuffle(batches.begin(), batches.end(), rng);
    return batches;
}

PretrainResult pretrain(Seq2SeqModel& model, const data::TrajectoryStore& store, std::span<const data::SampleRef> train,
                        std::span<const data::SampleRef> test, const PretrainConfig& cfg,
                        const std::function<void(int, double, double)>& progress) {
    if (train.empty() || test.empty()) throw std::invalid_argument("pretrain: train and test sets must be non-empty");
    PretrainResult result;
    if (cfg.epochs <= 0) return result;

    nn::Rng rng(cfg.seed);
    nn::AdamState adam;
    adam.learning_rate = cfg.learning_rate;
    Seq2SeqModel grad = model.zeros_like();
    const auto params = model.parameters();
    const auto grads = grad.parameters();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto batches = make_batches(train, cfg.batch_size, rng);
        if (cfg.max_batches_per_epoch > 0 && static_cast<int>(batches.size()) > cfg.max_batches_per_epoch)
            batches.resize(static_cast<std::size_t>(cfg.max_batches_per_epoch));

        double loss_sum = 0.0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const double progress_frac =
                (epoch + static_cast<double>(bi) / static_cast<double>(batches.size())) / cfg.epochs;
            adam.learning_rate = cfg.learning_rate * (cfg.final_lr_fraction + (1.0 - cfg.final_lr_fraction) * 0.5 *
                                                                               (1.0 + std::cos(std::numbers::pi * progress_frac)));
            std::vector<data::SampleRef> chunk;
            chunk.reserve(batches[bi].size());
            for (auto i : batches[bi]) chunk.push_back(train[i]);
            const Batch batch = make_batch(model, store, chunk);
            const Matrix feed = draw_feed_mask(batch.delay, batch.size(), model.config.teacher_forcing, rng);
            nn::zero(grads);
            double loss = 0.0;
            try {
                loss = loss_and_gradient(model, batch, feed, grad);
            } catch (const nn::NonFiniteError&) {
                std::ostringstream msg;
                msg << "pretraining diverged at epoch " << epoch << ", batch " << bi << " (delay " << batch.delay
                    << "); try a lower learning rate or a tighter grad_clip";
                throw nn::NonFiniteError(msg.str());
            }
            if (cfg.grad_clip > 0.0) {
                const double norm = std::sqrt(nn::squared_norm(grads));
                if (norm > cfg.grad_clip) {
                    const double s = cfg.grad_clip / norm;
                    for (const auto& g : grads)
                        for (double& x : g.values) x *= s;
                }
            }
            nn::adam_update(params, grads, adam);
            loss_sum += loss;
        }
        const double train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, batches.size()));
        const double test_loss = evaluate(model, store, test);
        if (!std::isfinite(test_loss))
            throw nn::NonFiniteError("pretraining diverged: non-finite test loss after epoch " + std::to_string(epoch));
        result.train_curve.push_back(train_loss);
        result.test_curve.push_back(test_loss);
        if (progress) progress(epoch, train_loss, test_loss);
    }
    model.trained = true;
    return result;
}

double evaluate(const Seq2SeqModel& model, const data::TrajectoryStore& store, std::span<const data::SampleRef> refs,
                int batch_size) {
    double sum = 0.0;
    double count = 0.0;
    for_each_eval_batch(model, store, refs, batch_size, [&](const Batch& batch, const ForwardResult& fwd) {
        const double n = static_cast<double>(batch.delay) * model.config.state_dim * batch.size();
        sum += fwd.loss * n;
        count += n;
    });
    return count > 0.0 ? sum / count : 0.0;
}

Vector raw_mse_per_dimension(const Seq2SeqModel& model, const data::TrajectoryStore& store,
                             std::span<const data::SampleRef> refs, int batch_size) {
    Vector sum = Vector::Zero(model.config.state_dim);
    double count = 0.0;
    for_each_eval_batch(model, store, refs, batch_size, [&](const Batch& batch, const ForwardResult& fwd) {
        for (int i = 0; i < batch.delay; ++i) {
            const Matrix pred = model.normalizer.unstate(fwd.predictions[static_cast<std::size_t>(i)]);
            const Matrix truth = model.normalizer.unstate(batch.labels[static_cast<std::size_t>(i)]);
            sum += (pred - truth).array().square().matrix().rowwise().sum();
            count += static_cast<double>(batch.size());
        }
    });
    return count > 0.0 ? Vector(sum / count) : sum;
}

}  // namespace deer::s2s
