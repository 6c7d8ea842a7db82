#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "deer/delay/information_state.hpp"
#include "deer/envs/environment.hpp"

namespace deer::delay {

/// Source of the per-step drop indicators omega_t.
class DropSource {
public:
    static DropSource bernoulli(double drop_prob, std::uint64_t seed);
    /// omega indexed by absolute episode timestep; past the end -> 0.
    static DropSource scripted(std::vector<int> omega);

    bool dropped(int t);
    bool is_scripted() const { return std::holds_alternative<Scripted>(source_); }

private:
    struct Bernoulli {
        double p;
        nn::Rng rng;
    };
    struct Scripted {
        std::vector<int> omega;
    };
    explicit DropSource(std::variant<Bernoulli, Scripted> s) : source_(std::move(s)) {}
    std::variant<Bernoulli, Scripted> source_;
};

struct TraceRow {
    int t = 0;
    int omega = 0;
    int z = 0;
    std::optional<InformationState> info;  // empty before the first observation
    std::optional<double> delivered_reward;
    std::optional<Vector> action;  // action taken at t
};

nlohmann::json to_json(const TraceRow& row);

struct DelayedStep {
    InformationState info;    // i_{t+1}
    double reward = 0.0;      // delivered reward paired with i_{t+1}
    bool done = false;
    bool dropped = false;
    double true_reward = 0.0; // reward of the underlying env step (0 while draining)
};

/// Wraps a delay-free environment into a random-dropping delayed process.
///
/// Timeline: the d_I initial actions are applied blind, so reset() returns
/// i_{d_I} = (s_0, c_0..c_{d_I-1}). Each step(a_t) advances the env once
/// (until its horizon H), draws omega_{t+1}, and returns i_{t+1} together
/// with the delivered reward r_{t+1-z_{t+1}} (repeated on drops). After H
/// the queue drains with forced deliveries; the episode ends once s_H is
/// delivered, i.e. after exactly H decisions.
class DelayProcess {
public:
    DelayProcess(std::unique_ptr<envs::Environment> env, DelayConfig cfg, DropSource drops);
    DelayProcess(const DelayProcess&) = delete;
    DelayProcess& operator=(const DelayProcess&) = delete;

    const InformationState& reset(std::uint64_t env_seed);
    DelayedStep step(const Vector& action);

    const InformationState& info() const { return info_; }
    /// Delivered reward paired with the current information state.
    double delivered_reward() const { return delivered_reward_; }
    int z() const { return info_.z; }
    int t() const { return t_; }
    bool done() const { return done_; }

    const DelayConfig& config() const { return cfg_; }
    const envs::Environment& env() const { return *env_; }
    const envs::EnvSpec& spec() const { return env_->spec(); }

    /// Realized undelayed states s_0..s_k and every action applied.
    const std::vector<Vector>& true_states() const { return true_states_; }
    const std::vector<Vector>& actions() const { return actions_; }
    /// Undelayed states actually delivered, indexed by generation time.
    const std::vector<std::optional<Vector>>& observed_states() const { return observed_; }

    double true_return() const { return true_return_; }
    double delivered_return() const { return delivered_return_; }
    const std::vector<TraceRow>& trace() const { return trace_; }
    void write_trace(std::ostream& out) const;

private:
    std::unique_ptr<envs::Environment> env_;
    DelayConfig cfg_;
    DropSource drops_;
    nn::Rng action_rng_;

    InformationState info_;
    std::vector<Vector> true_states_;
    std::vector<double> true_rewards_;
    std::vector<Vector> actions_;
    std::vector<std::optional<Vector>> observed_;
    std::vector<TraceRow> trace_;
    double delivered_reward_ = 0.0;
    double true_return_ = 0.0;
    double delivered_return_ = 0.0;
    int t_ = 0;
    bool done_ = true;
};

}  // namespace deer::delay
