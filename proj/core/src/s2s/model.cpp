#include "deer/s2s/model.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <stdexcept>

#include "deer/nn/attention.hpp"
#include "passes.hpp"

namespace deer::s2s {

namespace {

Vector to_vector(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<nn::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Matrix concat_rows(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

std::mutex handler_mutex;
std::function<void(const std::string&)> untrained_handler;

void warn_untrained(const std::string& message) {
    std::function<void(const std::string&)> handler;
    {
        std::lock_guard lock(handler_mutex);
        handler = untrained_handler;
    }
    if (handler) {
        handler(message);
        return;
    }
    static std::atomic<bool> printed{false};
    if (!printed.exchange(true)) std::cerr << "warning: " << message << '\n';
}

}  // namespace

void set_untrained_warning_handler(std::function<void(const std::string&)> handler) {
    std::lock_guard lock(handler_mutex);
    untrained_handler = std::move(handler);
}

void Seq2SeqConfig::validate() const {
    if (state_dim <= 0 || action_dim <= 0) throw std::invalid_argument("seq2seq: state/action dims must be positive");
    if (hidden <= 0 || embed <= 0) throw std::invalid_argument("seq2seq: K1 and K2 must be positive");
    if (max_delay < 1) throw std::invalid_argument("seq2seq: D must be >= 1");
    if (!(teacher_forcing >= 0.0 && teacher_forcing <= 1.0))
        throw std::invalid_argument("seq2seq: teacher forcing ratio must be in [0, 1]");
}

Normalizer Normalizer::identity(int state_dim, int action_dim) {
    return {Vector::Zero(state_dim), Vector::Ones(state_dim), Vector::Zero(action_dim), Vector::Ones(action_dim)};
}

Normalizer Normalizer::fit(const data::TrajectoryStore& store, const envs::EnvSpec& spec) {
    Normalizer n = identity(spec.state_dim, spec.action_dim);
    n.action_center = spec.action_center();
    n.action_scale = spec.action_half_range();

    Vector sum = Vector::Zero(spec.state_dim);
    Vector sq = Vector::Zero(spec.state_dim);
    double count = 0.0;
    for (const auto& traj : store.trajectories) {
        for (std::size_t i = 0; i < traj.num_states(); ++i) {
            const auto& s = traj.state(i);
            sum += s;
            sq += s.cwiseAbs2();
            count += 1.0;
        }
    }
    if (count < 2.0) return n;
    n.state_mean = sum / count;
    const Vector var = (sq / count - n.state_mean.cwiseAbs2()).cwiseMax(0.0);
    n.state_scale = var.cwiseSqrt();
    for (nn::Index i = 0; i < n.state_scale.size(); ++i)
        if (n.state_scale[i] < 1e-6) n.state_scale[i] = 1.0;
    return n;
}

Matrix Normalizer::state(const Matrix& raw) const {
    return ((raw.colwise() - state_mean).array().colwise() / state_scale.array()).matrix();
}

Matrix Normalizer::unstate(const Matrix& normalized) const {
    return ((normalized.array().colwise() * state_scale.array()).matrix().colwise() + state_mean);
}

Matrix Normalizer::action(const Matrix& raw) const {
    return ((raw.colwise() - action_center).array().colwise() / action_scale.array()).matrix();
}

Seq2SeqModel Seq2SeqModel::zeros(const Seq2SeqConfig& cfg) {
    cfg.validate();
    Seq2SeqModel m;
    m.config = cfg;
    m.normalizer = Normalizer::identity(cfg.state_dim, cfg.action_dim);
    m.state_embed = nn::DenseLayer::zeros(cfg.state_dim, cfg.embed, cfg.embed_activation);
    m.action_embed = nn::DenseLayer::zeros(cfg.action_dim, cfg.embed, cfg.embed_activation);
    m.encoder_gru = nn::GruCell::zeros(cfg.embed, cfg.hidden);
    m.decoder_embed = nn::DenseLayer::zeros(cfg.state_dim, cfg.embed, cfg.embed_activation);
    m.decoder_gru = nn::GruCell::zeros(cfg.embed + cfg.hidden, cfg.hidden);
    m.output_head = nn::DenseLayer::zeros(2 * cfg.hidden, cfg.state_dim, nn::Activation::identity);
    return m;
}

Seq2SeqModel Seq2SeqModel::create(const Seq2SeqConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    nn::Rng rng(seed);
    Seq2SeqModel m = zeros(cfg);
    m.state_embed = nn::DenseLayer::random(cfg.state_dim, cfg.embed, cfg.embed_activation, rng);
    m.action_embed = nn::DenseLayer::random(cfg.action_dim, cfg.embed, cfg.embed_activation, rng);
    m.encoder_gru = nn::GruCell::random(cfg.embed, cfg.hidden, rng);
    m.decoder_embed = nn::DenseLayer::random(cfg.state_dim, cfg.embed, cfg.embed_activation, rng);
    m.decoder_gru = nn::GruCell::random(cfg.embed + cfg.hidden, cfg.hidden, rng);
    m.output_head = nn::DenseLayer::random(2 * cfg.hidden, cfg.state_dim, nn::Activation::identity, rng);
    return m;
}

ContextRepresentation Seq2SeqModel::encode(const delay::InformationState& info) const {
    if (info.actions.empty()) throw std::invalid_argument("encode: information state has no actions");
    if (static_cast<int>(info.actions.size()) != info.z)
        throw std::invalid_argument("encode: action count does not match z");
    if (info.base_state.size() != config.state_dim) throw nn::ShapeError("encode: state dimension mismatch");

    const Matrix anchor = normalizer.state(info.base_state);
    std::vector<Matrix> actions;
    actions.reserve(info.actions.size());
    for (const auto& a : info.actions) {
        if (a.size() != config.action_dim) throw nn::ShapeError("encode: action dimension mismatch");
        actions.push_back(normalizer.action(a));
    }
    const auto states = detail::run_encoder(*this, anchor, actions, nullptr);
    return {states.back().col(0), info.z};
}

std::vector<Vector> Seq2SeqModel::predict_states(const delay::InformationState& info) const {
    if (info.actions.empty()) throw std::invalid_argument("predict_states: information state has no actions");
    if (!trained) warn_untrained("predict_states called on an untrained seq2seq model");
    const Matrix anchor = normalizer.state(info.base_state);
    std::vector<Matrix> actions;
    for (const auto& a : info.actions) actions.push_back(normalizer.action(a));
    const auto states = detail::run_encoder(*this, anchor, actions, nullptr);
    const int steps = static_cast<int>(info.actions.size());
    const Matrix feed = Matrix::Ones(steps, 1);
    const auto preds = detail::run_decoder(*this, states, {}, feed, steps, nullptr);
    std::vector<Vector> out;
    for (const auto& p : preds) out.push_back(normalizer.unstate(p).col(0));
    return out;
}

void Seq2SeqModel::collect(nn::ParamList& out) {
    state_embed.collect("state_embed", out);
    action_embed.collect("action_embed", out);
    encoder_gru.collect("encoder_gru", out);
    decoder_embed.collect("decoder_embed", out);
    decoder_gru.collect("decoder_gru", out);
    output_head.collect("output_head", out);
}

nn::ParamList Seq2SeqModel::parameters() {
    nn::ParamList out;
    collect(out);
    return out;
}

nn::Checkpoint Seq2SeqModel::to_checkpoint() const {
    nn::Checkpoint ckpt;
    ckpt.meta = {{"kind", "seq2seq"},
                 {"state_dim", config.state_dim},
                 {"action_dim", config.action_dim},
                 {"K1", config.hidden},
                 {"K2", config.embed},
                 {"D", config.max_delay},
                 {"teacher_forcing", config.teacher_forcing},
                 {"embed_activation", std::string(nn::to_string(config.embed_activation))},
                 {"trained", trained},
                 {"normalizer",
                  {{"state_mean", to_std(normalizer.state_mean)},
                   {"state_scale", to_std(normalizer.state_scale)},
                   {"action_center", to_std(normalizer.action_center)},
                   {"action_scale", to_std(normalizer.action_scale)}}}};
    auto copy = *this;
    ckpt.add(copy.parameters());
    return ckpt;
}

Seq2SeqModel Seq2SeqModel::from_checkpoint(const nn::Checkpoint& ckpt) {
    const auto& m = ckpt.meta;
    if (m.value("kind", "") != "seq2seq") throw std::runtime_error("checkpoint is not a seq2seq model");
    Seq2SeqConfig cfg;
    cfg.state_dim = m.at("state_dim").get<int>();
    cfg.action_dim = m.at("action_dim").get<int>();
    cfg.hidden = m.at("K1").get<int>();
    cfg.embed = m.at("K2").get<int>();
    cfg.max_delay = m.at("D").get<int>();
    cfg.teacher_forcing = m.at("teacher_forcing").get<double>();
    cfg.embed_activation = nn::activation_from_string(m.at("embed_activation").get<std::string>());
    Seq2SeqModel model = zeros(cfg);
    const auto& n = m.at("normalizer");
    model.normalizer.state_mean = to_vector(n.at("state_mean"));
    model.normalizer.state_scale = to_vector(n.at("state_scale"));
    model.normalizer.action_center = to_vector(n.at("action_center"));
    model.normalizer.action_scale = to_vector(n.at("action_scale"));
    model.trained = m.at("trained").get<bool>();
    ckpt.restore(model.parameters());
    return model;
}

namespace detail {

std::vector<Matrix> run_encoder(const Seq2SeqModel& model, const Matrix& anchor, const std::vector<Matrix>& actions,
                                EncoderTape* tape) {
    const auto batch = anchor.cols();
    std::vector<Matrix> states;
    states.reserve(actions.size() + 1);

    Matrix emb = model.state_embed.forward_batch(anchor);
    nn::GruCell::Cache cache;
    Matrix h = model.encoder_gru.step_batch(emb, Matrix::Zero(model.config.hidden, batch), tape ? &cache : nullptr);
    if (tape) {
        tape->anchor = anchor;
        tape->state_embedding = std::move(emb);
        tape->actions = actions;
        tape->action_embeddings.clear();
        tape->gru.clear();
        tape->gru.push_back(std::move(cache));
    }
    states.push_back(h);
    for (const auto& a : actions) {
        Matrix ea = model.action_embed.forward_batch(a);
        nn::GruCell::Cache c;
        h = model.encoder_gru.step_batch(ea, h, tape ? &c : nullptr);
        if (tape) {
            tape->action_embeddings.push_back(std::move(ea));
            tape->gru.push_back(std::move(c));
        }
        states.push_back(h);
    }
    return states;
}

std::vector<Matrix> run_decoder(const Seq2SeqModel& model, const std::vector<Matrix>& encoder_states,
                                const std::vector<Matrix>& labels, const Matrix& feed_mask, int steps,
                                std::vector<DecoderStep>* tape) {
    const auto batch = encoder_states.back().cols();
    const auto state_dim = model.config.state_dim;
    std::vector<Matrix> predictions;
    predictions.reserve(static_cast<std::size_t>(steps));
    if (tape) tape->clear();

    Matrix hidden = encoder_states.back();
    for (int i = 1; i <= steps; ++i) {
        DecoderStep step;
        Matrix weights;
        Matrix context = nn::attention_batch(encoder_states, hidden, &weights);

        Matrix input_state;
        if (i == 1) {
            input_state = Matrix::Zero(state_dim, batch);
        } else {
            const Matrix& predicted = predictions.back();
            const auto mask_row = feed_mask.row(i - 1);
            if (mask_row.minCoeff() >= 1.0) {
                input_state = predicted;
            } else {
                const Matrix& truth = labels.at(static_cast<std::size_t>(i - 2));
                input_state = predicted;
                for (nn::Index b = 0; b < batch; ++b)
                    if (mask_row(b) < 0.5) input_state.col(b) = truth.col(b);
            }
        }
        Matrix embedding = model.decoder_embed.forward_batch(input_state);
        Matrix gru_input = concat_rows(embedding, context);
        nn::GruCell::Cache cache;
        Matrix next_hidden = model.decoder_gru.step_batch(gru_input, hidden, tape ? &cache : nullptr);
        Matrix head_input = concat_rows(next_hidden, context);
        Matrix prediction = model.output_head.forward_batch(head_input);

        if (tape) {
            step.query = hidden;
            step.weights = std::move(weights);
            step.context = std::move(context);
            step.input_state = std::move(input_state);
            step.embedding = std::move(embedding);
            step.gru_input = std::move(gru_input);
            step.gru = std::move(cache);
            step.head_input = std::move(head_input);
            step.prediction = prediction;
            tape->push_back(std::move(step));
        }
        predictions.push_back(std::move(prediction));
        hidden = std::move(next_hidden);
    }
    return predictions;
}

}  // namespace detail

}  // namespace deer::s2s
