#include "gradient_suite.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "deer/agent/sac.hpp"
#include "deer/nn/attention.hpp"
#include "deer/nn/dense.hpp"
#include "deer/nn/gru.hpp"
#include "deer/nn/mlp.hpp"
#include "deer/s2s/model.hpp"
#include "deer/s2s/training.hpp"

namespace deer::testkit {

using nn::Matrix;
using nn::Vector;

namespace {

Matrix random_matrix(nn::Index r, nn::Index c, nn::Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix m(r, c);
    for (nn::Index j = 0; j < c; ++j)
        for (nn::Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

double weighted_sum(const Matrix& y, const Matrix& w) { return (y.array() * w.array()).sum(); }

}  // namespace

GradientCheck compare_gradients(const std::string& block, const nn::ParamList& params, const nn::ParamList& grads,
                                const std::function<double()>& loss, double step) {
    GradientCheck out{block, 0.0, 0};
    if (params.size() != grads.size()) throw nn::ShapeError("gradient check: parameter/gradient list mismatch");
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto values = params[p].values;
        const auto g = grads[p].values;
        if (values.size() != g.size()) throw nn::ShapeError("gradient check: block size mismatch " + params[p].name);
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            auto at = [&](double offset) {
                values[i] = saved + offset;
                return loss();
            };
            const double numeric = (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
            values[i] = saved;
            const double denom = std::max({std::abs(numeric), std::abs(g[i]), 1e-7});
            out.max_rel_error = std::max(out.max_rel_error, std::abs(numeric - g[i]) / denom);
            ++out.entries;
        }
    }
    return out;
}

GradientCheck check_dense(nn::Activation act, std::uint64_t seed) {
    nn::Rng rng(seed);
    auto layer = nn::DenseLayer::random(3, 4, act, rng);
    Matrix x = random_matrix(3, 5, rng);
    const Matrix target = random_matrix(4, 5, rng);
    auto loss = [&] { return (layer.forward_batch(x) - target).squaredNorm() / static_cast<double>(target.size()); };

    auto grad = layer.zeros_like();
    const Matrix y = layer.forward_batch(x);
    const Matrix dy = 2.0 * (y - target) / static_cast<double>(target.size());
    Matrix dx = layer.backward(x, y, dy, grad);

    nn::ParamList params, grads;
    layer.collect("dense", params);
    grad.collect("dense", grads);
    params.push_back(nn::make_span("x", x));
    grads.push_back(nn::make_span("x", dx));
    return compare_gradients(std::string("dense/") + std::string(nn::to_string(act)), params, grads, loss);
}

GradientCheck check_mlp(std::uint64_t seed) {
    nn::Rng rng(seed);
    auto mlp = nn::Mlp::random(3, {6, 5}, 2, nn::Activation::tanh, rng);
    Matrix x = random_matrix(3, 4, rng);
    const Matrix w = random_matrix(2, 4, rng);
    auto loss = [&] { return weighted_sum(mlp.forward(x), w); };
    nn::Mlp::Cache cache;
    mlp.forward(x, &cache);
    auto grad = mlp.zeros_like();
    Matrix dx = mlp.backward(cache, w, &grad);
    nn::ParamList params, grads;
    mlp.collect("mlp", params);
    grad.collect("mlp", grads);
    params.push_back(nn::make_span("x", x));
    grads.push_back(nn::make_span("x", dx));
    return compare_gradients("mlp", params, grads, loss);
}

GradientCheck check_gru(std::uint64_t seed) {
    nn::Rng rng(seed);
    auto cell = nn::GruCell::random(3, 4, rng);
    Matrix x = random_matrix(3, 2, rng);
    Matrix h = random_matrix(4, 2, rng, 0.5);
    const Matrix w = random_matrix(4, 2, rng);
    auto loss = [&] { return weighted_sum(cell.step_batch(x, h), w); };
    nn::GruCell::Cache cache;
    cell.step_batch(x, h, &cache);
    auto grad = cell.zeros_like();
    auto [dx, dh] = cell.backward(cache, w, grad);
    nn::ParamList params, grads;
    cell.collect("gru", params);
    grad.collect("gru", grads);
    params.push_back(nn::make_span("x", x));
    grads.push_back(nn::make_span("x", dx));
    params.push_back(nn::make_span("h_prev", h));
    grads.push_back(nn::make_span("h_prev", dh));
    return compare_gradients("gru", params, grads, loss);
}

GradientCheck check_attention(std::uint64_t seed) {
    nn::Rng rng(seed);
    std::vector<Matrix> states;
    for (int j = 0; j < 3; ++j) states.push_back(random_matrix(4, 2, rng));
    Matrix query = random_matrix(4, 2, rng);
    const Matrix w = random_matrix(4, 2, rng);
    auto loss = [&] { return weighted_sum(nn::attention_batch(states, query), w); };
    Matrix weights;
    nn::attention_batch(states, query, &weights);
    std::vector<Matrix> dstates(states.size(), Matrix::Zero(4, 2));
    Matrix dquery = Matrix::Zero(4, 2);
    nn::attention_backward(states, query, weights, w, dstates, dquery);
    nn::ParamList params, grads;
    for (std::size_t j = 0; j < states.size(); ++j) {
        params.push_back(nn::make_span("state" + std::to_string(j), states[j]));
        grads.push_back(nn::make_span("state" + std::to_string(j), dstates[j]));
    }
    params.push_back(nn::make_span("query", query));
    grads.push_back(nn::make_span("query", dquery));
    return compare_gradients("attention", params, grads, loss);
}

GradientCheck check_seq2seq(int delay, std::uint64_t seed) {
    s2s::Seq2SeqConfig cfg;
    cfg.state_dim = 3;
    cfg.action_dim = 2;
    cfg.hidden = 8;
    cfg.embed = 4;
    cfg.max_delay = 4;
    auto model = s2s::Seq2SeqModel::create(cfg, seed);
    nn::Rng rng(seed + 1);
    s2s::Batch batch;
    batch.delay = delay;
    batch.anchor = random_matrix(3, 3, rng);
    for (int i = 0; i < delay; ++i) {
        batch.actions.push_back(random_matrix(2, 3, rng));
        batch.labels.push_back(random_matrix(3, 3, rng));
    }
    Matrix feed = Matrix::Zero(delay, 3);
    for (int i = 1; i < delay; ++i)
        for (int b = 0; b < 3; ++b) feed(i, b) = (i + b) % 2;

    auto grad = model.zeros_like();
    s2s::loss_and_gradient(model, batch, feed, grad);
    auto loss = [&] { return s2s::forward(model, batch, feed).loss; };
    return compare_gradients("seq2seq/d" + std::to_string(delay), model.parameters(), grad.parameters(), loss);
}

namespace {

agent::SacAgent small_agent(std::uint64_t seed) {
    envs::EnvSpec spec;
    spec.name = "test";
    spec.state_dim = 3;
    spec.action_dim = 2;
    spec.action_low = Vector::Constant(2, -2.0);
    spec.action_high = Vector::Constant(2, 1.0);
    agent::SacConfig cfg;
    cfg.hidden = {6, 5};
    cfg.log_std_min = -5.0;
    cfg.log_std_max = 2.0;
    cfg.initial_alpha = 0.3;
    return agent::SacAgent(3, spec, cfg, seed);
}

agent::SacBatch small_batch(nn::Rng& rng) {
    agent::SacBatch b;
    b.obs = random_matrix(3, 4, rng);
    b.actions = random_matrix(2, 4, rng, 0.5).array().tanh().matrix();
    b.rewards = random_matrix(1, 4, rng);
    b.next_obs = random_matrix(3, 4, rng);
    b.dones = Eigen::RowVectorXd::Zero(4);
    b.dones(1) = 1.0;
    return b;
}

}  // namespace

GradientCheck check_sac_critic(std::uint64_t seed) {
    auto agent = small_agent(seed);
    nn::Rng rng(seed + 7);
    const auto batch = small_batch(rng);
    const Eigen::RowVectorXd targets = agent.critic_targets(batch, random_matrix(2, 4, rng));
    auto g1 = agent.critic1.zeros_like();
    auto g2 = agent.critic2.zeros_like();
    agent.critic_loss(batch, targets, &g1, &g2);
    nn::ParamList params, grads;
    agent.critic1.collect("critic1", params);
    agent.critic2.collect("critic2", params);
    g1.collect("critic1", grads);
    g2.collect("critic2", grads);
    auto loss = [&] { return agent.critic_loss(batch, targets, nullptr, nullptr); };
    return compare_gradients("sac/critic", params, grads, loss);
}

GradientCheck check_sac_actor(std::uint64_t seed) {
    auto agent = small_agent(seed);
    nn::Rng rng(seed + 11);
    const Matrix obs = random_matrix(3, 4, rng);
    const Matrix noise = random_matrix(2, 4, rng);
    auto grad = agent.actor.zeros_like();
    agent.actor_loss(obs, noise, &grad);
    nn::ParamList params, grads;
    agent.actor.collect("actor", params);
    grad.collect("actor", grads);
    auto loss = [&] { return agent.actor_loss(obs, noise, nullptr); };
    return compare_gradients("sac/actor", params, grads, loss);
}

GradientCheck check_sac_alpha(std::uint64_t seed) {
    auto agent = small_agent(seed);
    nn::Rng rng(seed + 13);
    const Eigen::RowVectorXd log_prob = random_matrix(1, 5, rng);
    double g = 0.0;
    agent.alpha_loss(log_prob, &g);
    nn::ParamList params{{"log_alpha", std::span<double>(&agent.log_alpha, 1)}};
    nn::ParamList grads{{"log_alpha", std::span<double>(&g, 1)}};
    auto loss = [&] { return agent.alpha_loss(log_prob, nullptr); };
    return compare_gradients("sac/alpha", params, grads, loss);
}

int gradient_check_count() { return 12; }

GradientCheck run_gradient_check(int index) {
    switch (index) {
        case 0: return check_dense(nn::Activation::identity, 1);
        case 1: return check_dense(nn::Activation::tanh, 2);
        case 2: return check_dense(nn::Activation::relu, 3);
        case 3: return check_mlp(4);
        case 4: return check_gru(5);
        case 5: return check_attention(6);
        case 6: return check_seq2seq(1, 7);
        case 7: return check_seq2seq(2, 8);
        case 8: return check_seq2seq(4, 9);
        case 9: return check_sac_critic(10);
        case 10: return check_sac_actor(11);
        case 11: return check_sac_alpha(12);
        default: throw std::out_of_range("gradient check index");
    }
}

std::vector<GradientCheck> run_gradient_suite() {
    std::vector<GradientCheck> out;
    for (int i = 0; i < gradient_check_count(); ++i) out.push_back(run_gradient_check(i));
    return out;
}

}  // namespace deer::testkit
