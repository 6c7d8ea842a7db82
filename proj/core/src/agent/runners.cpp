#include "deer/agent/runners.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>

#include "deer/agent/replay_buffer.hpp"
#include "deer/data/samples.hpp"
#include "deer/delay/delay_process.hpp"
#include "deer/nn/binary_io.hpp"

namespace deer::agent {

using nn::derive_seed;

namespace {

constexpr std::uint64_t kAgentStream = 1;
constexpr std::uint64_t kActionStream = 2;
constexpr std::uint64_t kOnlineModelStream = 3;
constexpr std::uint64_t kDropStream = 4;
constexpr std::uint64_t kEvalStream = 5;
constexpr std::uint64_t kEpisodeStream = 1000;

struct StepOut {
    Vector obs;
    double reward = 0.0;
    bool done = false;
};

class Driver {
public:
    virtual ~Driver() = default;
    virtual int input_dim() const = 0;
    virtual Vector reset(std::uint64_t seed) = 0;
    virtual StepOut step(const Vector& env_action) = 0;
    virtual double true_return() const = 0;
    virtual double delivered_return() const = 0;
};

class DirectDriver final : public Driver {
public:
    explicit DirectDriver(const envs::Environment& env) : env_(env.clone()) {}

    int input_dim() const override { return env_->spec().state_dim; }
    Vector reset(std::uint64_t seed) override {
        ret_ = 0.0;
        return env_->reset(seed);
    }
    StepOut step(const Vector& a) override {
        const auto tr = env_->step(a);
        ret_ += tr.reward;
        return {tr.next_state, tr.reward, env_->done()};
    }
    double true_return() const override { return ret_; }
    double delivered_return() const override { return ret_; }

private:
    std::unique_ptr<envs::Environment> env_;
    double ret_ = 0.0;
};

using Featurizer = std::function<Vector(const delay::InformationState&)>;

class DelayedDriver final : public Driver {
public:
    DelayedDriver(const envs::Environment& env, const delay::DelayConfig& cfg, std::uint64_t drop_seed, int dim,
                  Featurizer features)
        : process_(env.clone(), cfg, delay::DropSource::bernoulli(cfg.drop_prob, drop_seed)),
          dim_(dim),
          features_(std::move(features)) {}

    int input_dim() const override { return dim_; }
    Vector reset(std::uint64_t seed) override { return features_(process_.reset(seed)); }
    StepOut step(const Vector& a) override {
        const auto out = process_.step(a);
        return {features_(out.info), out.reward, out.done};
    }
    double true_return() const override { return process_.true_return(); }
    double delivered_return() const override { return process_.delivered_return(); }
    const delay::DelayProcess& process() const { return process_; }

private:
    delay::DelayProcess process_;
    int dim_;
    Featurizer features_;
};

Vector sacas_features(const delay::InformationState& info, const envs::EnvSpec& spec, int max_actions) {
    delay::InformationState scaled = info;
    const Vector center = spec.action_center();
    const Vector half = spec.action_half_range();
    for (auto& a : scaled.actions) a = ((a - center).array() / half.array()).matrix();
    return delay::flatten(scaled, max_actions);
}

struct FeatureSpec {
    int dim = 0;
    Featurizer features;
};

FeatureSpec feature_spec(Mode mode, const envs::EnvSpec& spec, const delay::DelayConfig& delay,
                         const s2s::Seq2SeqModel* const* model, long* encode_calls) {
    switch (mode) {
        case Mode::deer:
        case Mode::online_deer:
            if (!model || !*model) throw std::invalid_argument("DEER mode requires an encoder");
            return {(*model)->config.hidden, [model, encode_calls](const delay::InformationState& info) {
                        if (encode_calls) ++*encode_calls;
                        return (*model)->encode(info).values;
                    }};
        case Mode::dolps:
            if (!model || !*model) throw std::invalid_argument("DOLPS mode requires a trained model");
            return {spec.state_dim, [model](const delay::InformationState& info) {
                        return Vector((*model)->predict_states(info).back());
                    }};
        case Mode::sacas: {
            const int d = delay.max_delay();
            return {spec.state_dim + d * spec.action_dim,
                    [spec, d](const delay::InformationState& info) { return sacas_features(info, spec, d); }};
        }
    }
    throw std::invalid_argument("unknown mode");
}

void check_model(const s2s::Seq2SeqModel& model, const envs::EnvSpec& spec, const delay::DelayConfig& delay) {
    if (model.config.state_dim != spec.state_dim || model.config.action_dim != spec.action_dim)
        throw std::invalid_argument("encoder dimensions do not match the environment");
    if (model.config.max_delay < delay.max_delay())
        throw std::invalid_argument("encoder max_delay is below the configured maximum delay");
}

void accumulate(SacLosses& sum, const SacLosses& l) {
    sum.critic += l.critic;
    sum.actor += l.actor;
    sum.alpha_loss += l.alpha_loss;
    sum.entropy += l.entropy;
    sum.alpha = l.alpha;
}

using EpisodeHook = std::function<void(const Driver&, long)>;

std::vector<double> run_eval(Driver& drv, const SacAgent& agent, int episodes, std::uint64_t seed,
                             std::vector<CurvePoint>* curve, long step) {
    std::vector<double> returns;
    nn::Rng rng(seed);
    for (int e = 0; e < episodes; ++e) {
        Vector obs = drv.reset(derive_seed(seed, kEpisodeStream + static_cast<std::uint64_t>(e)));
        for (;;) {
            const auto out = drv.step(agent.act(obs, true, rng));
            obs = out.obs;
            if (out.done) break;
        }
        returns.push_back(drv.true_return());
        if (curve) {
            CurvePoint p;
            p.step = step;
            p.episode = e;
            p.eval = true;
            p.return_true = drv.true_return();
            p.return_delivered = drv.delivered_return();
            p.losses.alpha = agent.alpha();
            curve->push_back(p);
        }
    }
    return returns;
}

RunResult train_loop(Driver& drv, Driver& eval_drv, const envs::EnvSpec& spec, const RunConfig& cfg,
                     const EpisodeHook& on_episode_end = {}) {
    if (cfg.total_steps <= 0) throw std::invalid_argument("run: total_steps must be positive");
    if (cfg.eval_episodes < 0) throw std::invalid_argument("run: eval_episodes must be non-negative");
    RunResult result;
    result.input_dim = drv.input_dim();
    SacAgent agent(drv.input_dim(), spec, cfg.sac, derive_seed(cfg.seed, kAgentStream));
    ReplayBuffer buffer(static_cast<std::size_t>(cfg.sac.buffer_capacity));
    nn::Rng rng(derive_seed(cfg.seed, kActionStream));
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const long threshold = std::max(1, cfg.sac.training_threshold);

    long step = 0;
    int episode = 0;
    while (step < cfg.total_steps) {
        Vector obs = drv.reset(derive_seed(cfg.seed, kEpisodeStream + static_cast<std::uint64_t>(episode)));
        CurvePoint point;
        for (bool done = false; !done;) {
            Vector a(spec.action_dim);
            if (step < threshold) {
                for (auto& v : a) v = uniform(rng);
            } else {
                a = agent.act_normalized(obs, false, rng);
            }
            auto out = drv.step(agent.to_env_action(a));
            const int len = static_cast<int>(obs.size());
            if (std::find(result.replay_input_lengths.begin(), result.replay_input_lengths.end(), len) ==
                result.replay_input_lengths.end())
                result.replay_input_lengths.push_back(len);
            // Horizon truncation is not a terminal state, so done stays false.
            buffer.push(ReplayEntry{obs, a, out.reward, out.obs, false});
            obs = std::move(out.obs);
            done = out.done;
            ++step;
            if (static_cast<long>(buffer.size()) >= threshold) {
                for (int k = 0; k < cfg.sac.updates_per_step; ++k) {
                    accumulate(point.losses, agent.update(buffer.sample(cfg.sac.batch_size, rng), rng));
                    ++point.updates;
                }
                agent.trained = true;
            }
        }
        if (point.updates > 0) {
            const double n = point.updates;
            point.losses.critic /= n;
            point.losses.actor /= n;
            point.losses.alpha_loss /= n;
            point.losses.entropy /= n;
        }
        point.losses.alpha = agent.alpha();
        point.step = step;
        point.episode = episode;
        point.return_true = drv.true_return();
        point.return_delivered = drv.delivered_return();
        result.curve.push_back(point);
        ++episode;
        if (on_episode_end) on_episode_end(drv, step);
    }
    result.env_steps = step;
    result.episodes = episode;

    const auto returns =
        run_eval(eval_drv, agent, cfg.eval_episodes, derive_seed(cfg.seed, kEvalStream), &result.curve, step);
    double sum = 0.0;
    for (double r : returns) sum += r;
    result.final_return = returns.empty() ? 0.0 : sum / static_cast<double>(returns.size());
    result.agent = std::move(agent);
    return result;
}

std::uint64_t drop_seed(const RunConfig& cfg, const delay::DelayConfig& delay, std::uint64_t stream) {
    return derive_seed(derive_seed(cfg.seed, kDropStream + stream), delay.seed);
}

RunResult run_delayed(const envs::Environment& env, const delay::DelayConfig& delay, Mode mode,
                      const s2s::Seq2SeqModel* model, const RunConfig& cfg) {
    const auto& spec = env.spec();
    if (model) check_model(*model, spec, delay);
    long encodes = 0;
    const s2s::Seq2SeqModel* holder = model;
    const auto train_fs = feature_spec(mode, spec, delay, &holder, &encodes);
    const auto eval_fs = feature_spec(mode, spec, delay, &holder, nullptr);
    DelayedDriver drv(env, delay, drop_seed(cfg, delay, 0), train_fs.dim, train_fs.features);
    DelayedDriver eval_drv(env, delay, drop_seed(cfg, delay, 1), eval_fs.dim, eval_fs.features);
    auto result = train_loop(drv, eval_drv, spec, cfg);
    result.encode_calls = encodes;
    return result;
}

}  // namespace

std::string to_string(Mode m) {
    switch (m) {
        case Mode::deer: return "deer";
        case Mode::sacas: return "sacas";
        case Mode::dolps: return "dolps";
        case Mode::online_deer: return "online-deer";
    }
    return "unknown";
}

Mode mode_from_string(const std::string& name) {
    if (name == "deer") return Mode::deer;
    if (name == "sacas") return Mode::sacas;
    if (name == "dolps") return Mode::dolps;
    if (name == "online-deer" || name == "online_deer") return Mode::online_deer;
    throw std::invalid_argument("unknown mode '" + name + "' (expected deer, sacas, dolps or online-deer)");
}

RunResult run_delay_free(const envs::Environment& env, const RunConfig& cfg) {
    DirectDriver drv(env);
    DirectDriver eval_drv(env);
    return train_loop(drv, eval_drv, env.spec(), cfg);
}

RunResult run_deer(const envs::Environment& env, const delay::DelayConfig& delay, const s2s::Seq2SeqModel& encoder,
                   const RunConfig& cfg) {
    return run_delayed(env, delay, Mode::deer, &encoder, cfg);
}

RunResult run_sacas(const envs::Environment& env, const delay::DelayConfig& delay, const RunConfig& cfg) {
    return run_delayed(env, delay, Mode::sacas, nullptr, cfg);
}

RunResult run_dolps(const envs::Environment& env, const delay::DelayConfig& delay, const s2s::Seq2SeqModel& model,
                    const RunConfig& cfg) {
    return run_delayed(env, delay, Mode::dolps, &model, cfg);
}

namespace {

// Splits the delivered states of one episode into runs of consecutive
// observations, each a trajectory with the actions taken in between.
void append_observed_segments(const delay::DelayProcess& p, data::TrajectoryStore& store) {
    const auto& obs = p.observed_states();
    const auto& actions = p.actions();
    data::Trajectory current;
    auto flush = [&] {
        if (!current.steps.empty()) store.trajectories.push_back(std::move(current));
        current = data::Trajectory{};
    };
    for (std::size_t t = 0; t + 1 < obs.size() && t < actions.size(); ++t) {
        if (obs[t] && obs[t + 1]) {
            current.steps.push_back(envs::Transition{*obs[t], actions[t], 0.0, *obs[t + 1], false});
        } else {
            flush();
        }
    }
    flush();
}

}  // namespace

RunResult run_online_deer(const envs::Environment& env, const delay::DelayConfig& delay, const RunConfig& cfg) {
    const auto& spec = env.spec();
    s2s::Seq2SeqConfig mcfg = cfg.online.model;
    mcfg.state_dim = spec.state_dim;
    mcfg.action_dim = spec.action_dim;
    mcfg.max_delay = std::max(mcfg.max_delay, delay.max_delay());
    s2s::Seq2SeqModel model = s2s::Seq2SeqModel::create(mcfg, derive_seed(cfg.seed, kOnlineModelStream));
    model.normalizer.action_center = spec.action_center();
    model.normalizer.action_scale = spec.action_half_range();

    long encodes = 0;
    const s2s::Seq2SeqModel* holder = &model;
    const auto train_fs = feature_spec(Mode::online_deer, spec, delay, &holder, &encodes);
    const auto eval_fs = feature_spec(Mode::online_deer, spec, delay, &holder, nullptr);
    DelayedDriver drv(env, delay, drop_seed(cfg, delay, 0), train_fs.dim, train_fs.features);
    DelayedDriver eval_drv(env, delay, drop_seed(cfg, delay, 1), eval_fs.dim, eval_fs.features);

    data::TrajectoryStore observed;
    long next_refit = cfg.online.retrain_period;
    int refits = 0;
    auto hook = [&](const Driver& d, long step) {
        append_observed_segments(static_cast<const DelayedDriver&>(d).process(), observed);
        if (cfg.online.retrain_period <= 0 || step < next_refit) return;
        while (next_refit <= step) next_refit += cfg.online.retrain_period;
        auto refs = data::make_samples(observed, mcfg.max_delay, data::full_delay_set(mcfg.max_delay));
        if (refs.size() < 2) return;
        const std::uint64_t seed = derive_seed(cfg.seed, kOnlineModelStream + 100 + static_cast<std::uint64_t>(refits));
        auto [train, test] = data::split(std::move(refs), 0.9, seed);
        model.normalizer = s2s::Normalizer::fit(observed, spec);
        s2s::PretrainConfig pc = cfg.online.training;
        pc.seed = seed;
        s2s::pretrain(model, observed, train, test, pc);
        ++refits;
    };
    auto result = train_loop(drv, eval_drv, spec, cfg, hook);
    result.encode_calls = encodes;
    result.encoder = model;
    return result;
}

std::vector<double> evaluate_policy(const envs::Environment& env, const std::optional<delay::DelayConfig>& delay,
                                    Mode mode, const SacAgent& agent, const s2s::Seq2SeqModel* model, int episodes,
                                    std::uint64_t seed) {
    if (!delay) {
        DirectDriver drv(env);
        if (drv.input_dim() != agent.input_dim()) throw std::invalid_argument("policy input does not match the env");
        return run_eval(drv, agent, episodes, seed, nullptr, 0);
    }
    if (model) check_model(*model, env.spec(), *delay);
    const s2s::Seq2SeqModel* holder = model;
    const auto fs = feature_spec(mode, env.spec(), *delay, &holder, nullptr);
    if (fs.dim != agent.input_dim()) throw std::invalid_argument("policy input does not match the representation");
    DelayedDriver drv(env, *delay, derive_seed(seed, kDropStream), fs.dim, fs.features);
    return run_eval(drv, agent, episodes, seed, nullptr, 0);
}

nlohmann::json to_json(const CurvePoint& p) {
    return {{"step", p.step},
            {"episode", p.episode},
            {"phase", p.eval ? "eval" : "train"},
            {"episode_return_true", p.return_true},
            {"episode_return_delivered", p.return_delivered},
            {"losses",
             {{"critic", p.losses.critic},
              {"actor", p.losses.actor},
              {"alpha", p.losses.alpha_loss},
              {"entropy", p.losses.entropy}}},
            {"alpha", p.losses.alpha},
            {"updates", p.updates}};
}

void write_curve(std::ostream& out, const std::vector<CurvePoint>& curve, const nlohmann::json& extra) {
    for (const auto& p : curve) {
        auto j = to_json(p);
        if (extra.is_object()) j.update(extra);
        out << j.dump() << '\n';
    }
}

}  // namespace deer::agent
