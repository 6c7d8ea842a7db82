#include "deer/agent/sac.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace deer::agent {

using nn::require_shape;

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2), stable for large |u|
double log_one_minus_tanh_sq(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

Matrix standard_normal(Index rows, Index cols, nn::Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

nn::ParamList params_of(nn::Mlp& net) {
    nn::ParamList out;
    net.collect("", out);
    return out;
}

}  // namespace

void SacConfig::validate() const {
    if (hidden.empty()) throw std::invalid_argument("sac: at least one hidden layer is required");
    for (int h : hidden)
        if (h <= 0) throw std::invalid_argument("sac: hidden widths must be positive");
    if (actor_lr <= 0 || critic_lr <= 0 || alpha_lr <= 0) throw std::invalid_argument("sac: learning rates must be positive");
    if (batch_size <= 0) throw std::invalid_argument("sac: batch_size must be positive");
    if (gamma < 0 || gamma >= 1) throw std::invalid_argument("sac: gamma must lie in [0, 1)");
    if (tau <= 0 || tau > 1) throw std::invalid_argument("sac: tau must lie in (0, 1]");
    if (initial_alpha <= 0) throw std::invalid_argument("sac: initial_alpha must be positive");
    if (buffer_capacity <= 0) throw std::invalid_argument("sac: buffer_capacity must be positive");
    if (training_threshold < 0) throw std::invalid_argument("sac: training_threshold must be non-negative");
    if (updates_per_step < 0) throw std::invalid_argument("sac: updates_per_step must be non-negative");
    if (log_std_min >= log_std_max) throw std::invalid_argument("sac: log_std_min must be below log_std_max");
}

void to_json(nlohmann::json& j, const SacConfig& c) {
    j = {{"hidden", c.hidden},
         {"actor_lr", c.actor_lr},
         {"critic_lr", c.critic_lr},
         {"alpha_lr", c.alpha_lr},
         {"batch_size", c.batch_size},
         {"gamma", c.gamma},
         {"tau", c.tau},
         {"initial_alpha", c.initial_alpha},
         {"auto_alpha", c.auto_alpha},
         {"target_entropy", c.target_entropy ? nlohmann::json(*c.target_entropy) : nlohmann::json(nullptr)},
         {"buffer_capacity", c.buffer_capacity},
         {"training_threshold", c.training_threshold},
         {"updates_per_step", c.updates_per_step},
         {"log_std_min", c.log_std_min},
         {"log_std_max", c.log_std_max}};
}

void from_json(const nlohmann::json& j, SacConfig& c) {
    SacConfig d;
    c.hidden = j.value("hidden", d.hidden);
    c.actor_lr = j.value("actor_lr", d.actor_lr);
    c.critic_lr = j.value("critic_lr", d.critic_lr);
    c.alpha_lr = j.value("alpha_lr", d.alpha_lr);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.gamma = j.value("gamma", d.gamma);
    c.tau = j.value("tau", d.tau);
    c.initial_alpha = j.value("initial_alpha", d.initial_alpha);
    c.auto_alpha = j.value("auto_alpha", d.auto_alpha);
    c.target_entropy.reset();
    if (j.contains("target_entropy") && !j.at("target_entropy").is_null())
        c.target_entropy = j.at("target_entropy").get<double>();
    c.buffer_capacity = j.value("buffer_capacity", d.buffer_capacity);
    c.training_threshold = j.value("training_threshold", d.training_threshold);
    c.updates_per_step = j.value("updates_per_step", d.updates_per_step);
    c.log_std_min = j.value("log_std_min", d.log_std_min);
    c.log_std_max = j.value("log_std_max", d.log_std_max);
}

SacAgent::SacAgent(int input_dim, const envs::EnvSpec& spec, SacConfig cfg, std::uint64_t seed)
    : input_dim_(input_dim), action_dim_(spec.action_dim), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (input_dim_ <= 0) throw std::invalid_argument("sac: input_dim must be positive");
    if (action_dim_ <= 0 || spec.action_low.size() != action_dim_ || spec.action_high.size() != action_dim_)
        throw std::invalid_argument("sac: action bounds do not match action_dim");
    action_center_ = spec.action_center();
    action_scale_ = spec.action_half_range();
    if ((action_scale_.array() <= 0.0).any()) throw std::invalid_argument("sac: action bounds must have positive width");

    nn::Rng rng(seed);
    actor = nn::Mlp::random(input_dim_, cfg_.hidden, 2 * action_dim_, nn::Activation::relu, rng);
    critic1 = nn::Mlp::random(input_dim_ + action_dim_, cfg_.hidden, 1, nn::Activation::relu, rng);
    critic2 = nn::Mlp::random(input_dim_ + action_dim_, cfg_.hidden, 1, nn::Activation::relu, rng);
    target1 = critic1;
    target2 = critic2;
    log_alpha = std::log(cfg_.initial_alpha);
    actor_opt_.learning_rate = cfg_.actor_lr;
    critic1_opt_.learning_rate = cfg_.critic_lr;
    critic2_opt_.learning_rate = cfg_.critic_lr;
    alpha_opt_.learning_rate = cfg_.alpha_lr;
}

double SacAgent::alpha() const { return std::exp(log_alpha); }

double SacAgent::target_entropy() const {
    return cfg_.target_entropy ? *cfg_.target_entropy : -static_cast<double>(action_dim_);
}

Vector SacAgent::to_env_action(const Vector& normalized) const {
    require_shape(normalized.size() == action_dim_, "sac: action has the wrong dimension");
    return action_center_ + action_scale_.cwiseProduct(normalized);
}

Vector SacAgent::to_normalized_action(const Vector& env_action) const {
    require_shape(env_action.size() == action_dim_, "sac: action has the wrong dimension");
    return ((env_action - action_center_).array() / action_scale_.array()).cwiseMax(-1.0).cwiseMin(1.0);
}

PolicySample SacAgent::sample_policy(const Matrix& obs, const Matrix& noise) const {
    require_shape(obs.rows() == input_dim_, "sac: observation has the wrong dimension");
    require_shape(noise.rows() == action_dim_ && noise.cols() == obs.cols(), "sac: noise shape mismatch");
    PolicySample s;
    const Matrix out = actor.forward(obs, &s.cache);
    const Index a = action_dim_;
    const double half = 0.5 * (cfg_.log_std_max - cfg_.log_std_min);
    s.mean = out.topRows(a);
    s.log_std_raw = out.bottomRows(a);
    s.log_std = (cfg_.log_std_min + half * (s.log_std_raw.array().tanh() + 1.0)).matrix();
    s.pre_tanh = s.mean + (s.log_std.array().exp() * noise.array()).matrix();
    s.action = s.pre_tanh.array().tanh().matrix();
    s.log_prob.resize(obs.cols());
    const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
    for (Index j = 0; j < obs.cols(); ++j) {
        double lp = 0.0;
        for (Index i = 0; i < a; ++i)
            lp += -0.5 * noise(i, j) * noise(i, j) - s.log_std(i, j) - log_norm - log_one_minus_tanh_sq(s.pre_tanh(i, j));
        s.log_prob(j) = lp;
    }
    return s;
}

Vector SacAgent::act_normalized(const Vector& obs, bool deterministic, nn::Rng& rng) const {
    require_shape(obs.size() == input_dim_, "sac: observation has the wrong dimension");
    if (!obs.allFinite()) throw std::invalid_argument("sac: observation is not finite");
    if (deterministic) {
        const Matrix out = actor.forward(obs);
        return out.col(0).head(action_dim_).array().tanh();
    }
    const Matrix noise = standard_normal(action_dim_, 1, rng);
    return sample_policy(obs, noise).action.col(0);
}

Vector SacAgent::act(const Vector& obs, bool deterministic, nn::Rng& rng) const {
    return to_env_action(act_normalized(obs, deterministic, rng));
}

Matrix SacAgent::critic_input(const Matrix& obs, const Matrix& actions) const {
    require_shape(obs.rows() == input_dim_ && actions.rows() == action_dim_ && obs.cols() == actions.cols(),
                  "sac: critic input shape mismatch");
    Matrix x(input_dim_ + action_dim_, obs.cols());
    x.topRows(input_dim_) = obs;
    x.bottomRows(action_dim_) = actions;
    return x;
}

Eigen::RowVectorXd SacAgent::critic_targets(const SacBatch& batch, const Matrix& next_noise) const {
    const PolicySample next = sample_policy(batch.next_obs, next_noise);
    const Matrix x = critic_input(batch.next_obs, next.action);
    const Eigen::RowVectorXd q = target1.forward(x).row(0).cwiseMin(target2.forward(x).row(0));
    const Eigen::RowVectorXd soft = q - alpha() * next.log_prob;
    return batch.rewards + (cfg_.gamma * (1.0 - batch.dones.array()) * soft.array()).matrix();
}

double SacAgent::critic_loss(const SacBatch& batch, const Eigen::RowVectorXd& targets, nn::Mlp* grad1,
                             nn::Mlp* grad2) const {
    const Matrix x = critic_input(batch.obs, batch.actions);
    const double n = static_cast<double>(batch.size());
    nn::Mlp::Cache c1, c2;
    const Eigen::RowVectorXd e1 = critic1.forward(x, &c1).row(0) - targets;
    const Eigen::RowVectorXd e2 = critic2.forward(x, &c2).row(0) - targets;
    if (grad1) critic1.backward(c1, (2.0 / n) * e1, grad1);
    if (grad2) critic2.backward(c2, (2.0 / n) * e2, grad2);
    return (e1.squaredNorm() + e2.squaredNorm()) / n;
}

double SacAgent::actor_loss(const Matrix& obs, const Matrix& noise, nn::Mlp* grad, Eigen::RowVectorXd* log_prob) const {
    const PolicySample s = sample_policy(obs, noise);
    const Matrix x = critic_input(obs, s.action);
    nn::Mlp::Cache c1, c2;
    const Eigen::RowVectorXd q1 = critic1.forward(x, &c1).row(0);
    const Eigen::RowVectorXd q2 = critic2.forward(x, &c2).row(0);
    const double n = static_cast<double>(obs.cols());
    const double a = alpha();
    if (log_prob) *log_prob = s.log_prob;

    double loss = 0.0;
    Eigen::RowVectorXd dq1 = Eigen::RowVectorXd::Zero(obs.cols());
    Eigen::RowVectorXd dq2 = Eigen::RowVectorXd::Zero(obs.cols());
    for (Index j = 0; j < obs.cols(); ++j) {
        const bool first = q1(j) <= q2(j);
        loss += a * s.log_prob(j) - (first ? q1(j) : q2(j));
        (first ? dq1 : dq2)(j) = -1.0 / n;
    }
    loss /= n;
    if (!grad) return loss;

    const Matrix dx1 = critic1.backward(c1, dq1, nullptr);
    const Matrix dx2 = critic2.backward(c2, dq2, nullptr);
    const Matrix d_action = dx1.bottomRows(action_dim_) + dx2.bottomRows(action_dim_);
    const Matrix one_minus_sq = (1.0 - s.action.array().square()).matrix();
    const Matrix d_pre = (d_action.array() * one_minus_sq.array() + (2.0 * a / n) * s.action.array()).matrix();
    const Matrix std_dev = s.log_std.array().exp().matrix();
    const Matrix d_log_std = (d_pre.array() * std_dev.array() * noise.array() - a / n).matrix();
    const double half = 0.5 * (cfg_.log_std_max - cfg_.log_std_min);
    const Matrix d_raw = (d_log_std.array() * half * (1.0 - s.log_std_raw.array().tanh().square())).matrix();

    Matrix d_out(2 * action_dim_, obs.cols());
    d_out.topRows(action_dim_) = d_pre;
    d_out.bottomRows(action_dim_) = d_raw;
    actor.backward(s.cache, d_out, grad);
    return loss;
}

double SacAgent::alpha_loss(const Eigen::RowVectorXd& log_prob, double* grad) const {
    const double mean_term = (log_prob.array() + target_entropy()).mean();
    if (grad) *grad = -mean_term;
    return -log_alpha * mean_term;
}

SacLosses SacAgent::update(const SacBatch& batch, nn::Rng& rng) {
    require_shape(batch.size() > 0, "sac: empty batch");
    SacLosses out;

    const Eigen::RowVectorXd targets = critic_targets(batch, standard_normal(action_dim_, batch.size(), rng));
    nn::Mlp g1 = critic1.zeros_like();
    nn::Mlp g2 = critic2.zeros_like();
    out.critic = critic_loss(batch, targets, &g1, &g2);
    if (!std::isfinite(out.critic)) throw nn::NonFiniteError("sac: critic loss is not finite");
    nn::adam_update(params_of(critic1), params_of(g1), critic1_opt_);
    nn::adam_update(params_of(critic2), params_of(g2), critic2_opt_);

    nn::Mlp ga = actor.zeros_like();
    Eigen::RowVectorXd log_prob;
    out.actor = actor_loss(batch.obs, standard_normal(action_dim_, batch.size(), rng), &ga, &log_prob);
    if (!std::isfinite(out.actor)) throw nn::NonFiniteError("sac: actor loss is not finite");
    nn::adam_update(params_of(actor), params_of(ga), actor_opt_);
    out.entropy = -log_prob.mean();

    double d_alpha = 0.0;
    out.alpha_loss = alpha_loss(log_prob, &d_alpha);
    if (cfg_.auto_alpha) {
        nn::ParamList p{{"log_alpha", std::span<double>(&log_alpha, 1)}};
        nn::ParamList g{{"log_alpha", std::span<double>(&d_alpha, 1)}};
        nn::adam_update(p, g, alpha_opt_);
    }
    out.alpha = alpha();

    nn::Mlp::polyak(critic1, target1, cfg_.tau);
    nn::Mlp::polyak(critic2, target2, cfg_.tau);
    return out;
}

nn::Checkpoint SacAgent::to_checkpoint() const {
    nn::Checkpoint ckpt;
    nlohmann::json cfg_json;
    to_json(cfg_json, cfg_);
    ckpt.meta = {{"kind", "sac"},
                 {"input_dim", input_dim_},
                 {"action_dim", action_dim_},
                 {"action_center", std::vector<double>(action_center_.begin(), action_center_.end())},
                 {"action_scale", std::vector<double>(action_scale_.begin(), action_scale_.end())},
                 {"log_alpha", log_alpha},
                 {"trained", trained},
                 {"config", cfg_json}};
    SacAgent copy = *this;
    nn::ParamList params;
    copy.actor.collect("actor", params);
    copy.critic1.collect("critic1", params);
    copy.critic2.collect("critic2", params);
    copy.target1.collect("target1", params);
    copy.target2.collect("target2", params);
    ckpt.add(params);
    return ckpt;
}

SacAgent SacAgent::from_checkpoint(const nn::Checkpoint& ckpt) {
    const auto& m = ckpt.meta;
    if (m.value("kind", "") != "sac") throw std::runtime_error("checkpoint is not a SAC policy");
    const auto center = m.at("action_center").get<std::vector<double>>();
    const auto scale = m.at("action_scale").get<std::vector<double>>();
    envs::EnvSpec spec;
    spec.action_dim = m.at("action_dim").get<int>();
    if (static_cast<int>(center.size()) != spec.action_dim || static_cast<int>(scale.size()) != spec.action_dim)
        throw std::runtime_error("SAC checkpoint: action bounds do not match action_dim");
    spec.action_low.resize(spec.action_dim);
    spec.action_high.resize(spec.action_dim);
    for (int i = 0; i < spec.action_dim; ++i) {
        spec.action_low(i) = center[i] - scale[i];
        spec.action_high(i) = center[i] + scale[i];
    }
    SacConfig cfg;
    from_json(m.at("config"), cfg);
    SacAgent agent(m.at("input_dim").get<int>(), spec, cfg, 0);
    nn::ParamList params;
    agent.actor.collect("actor", params);
    agent.critic1.collect("critic1", params);
    agent.critic2.collect("critic2", params);
    agent.target1.collect("target1", params);
    agent.target2.collect("target2", params);
    ckpt.restore(params);
    agent.log_alpha = m.at("log_alpha").get<double>();
    agent.trained = m.value("trained", false);
    return agent;
}

SacExpert::SacExpert(SacAgent agent) : agent_(std::move(agent)) {
    if (!agent_.trained) throw std::logic_error("SAC expert requires a trained policy");
}

Vector SacExpert::act(const Vector& state) const { return agent_.act(state, true, rng_); }

}  // namespace deer::agent
