#include "deer/delay/delay_process.hpp"

#include <stdexcept>

namespace deer::delay {

DropSource DropSource::bernoulli(double drop_prob, std::uint64_t seed) {
    return DropSource(Bernoulli{drop_prob, nn::Rng(seed)});
}

DropSource DropSource::scripted(std::vector<int> omega) { return DropSource(Scripted{std::move(omega)}); }

bool DropSource::dropped(int t) {
    if (auto* s = std::get_if<Scripted>(&source_)) {
        return t >= 0 && t < static_cast<int>(s->omega.size()) && s->omega[static_cast<std::size_t>(t)] != 0;
    }
    auto& b = std::get<Bernoulli>(source_);
    if (b.p <= 0.0) return false;
    return std::bernoulli_distribution(b.p)(b.rng);
}


nlohmann::json to_json(const TraceRow& row) {
    nlohmann::json j{{"t", row.t}, {"omega", row.omega}, {"z", row.z}};
    if (row.info) {
        const auto info = to_json(*row.info);
        j["base_state"] = info["base_state"];
        j["actions"] = info["actions"];
    } else {
        j["base_state"] = nullptr;
        j["actions"] = nullptr;
    }
    j["delivered_reward"] = row.delivered_reward ? nlohmann::json(*row.delivered_reward) : nlohmann::json(nullptr);
    return j;
}

DelayProcess::DelayProcess(std::unique_ptr<envs::Environment> env, DelayConfig cfg, DropSource drops)
    : env_(std::move(env)), cfg_(std::move(cfg)), drops_(std::move(drops)), action_rng_(cfg_.seed ^ 0x9e3779b97f4a7c15ULL) {
    if (!env_) throw std::invalid_argument("DelayProcess: null environment");
    cfg_.validate(env_->spec().action_dim);
}

const InformationState& DelayProcess::reset(std::uint64_t env_seed) {
    const auto& spec = env_->spec();
    const int d_i = cfg_.intrinsic_delay;

    true_states_.clear();
    true_rewards_.clear();
    actions_.clear();
    observed_.clear();
    trace_.clear();
    true_return_ = 0.0;
    delivered_return_ = 0.0;

    true_states_.push_back(env_->reset(env_seed));
    observed_.emplace_back();

    std::vector<Vector> initial = cfg_.initial_actions;
    if (initial.empty()) {
        for (int i = 0; i < d_i; ++i) {
            Vector a = Vector::Zero(spec.action_dim);
            if (cfg_.random_initial_actions) {
                for (int k = 0; k < spec.action_dim; ++k)
                    a[k] = std::uniform_real_distribution<double>(spec.action_low[k], spec.action_high[k])(action_rng_);
            }
            initial.push_back(std::move(a));
        }
    }

    // t = 0 .. d_I - 1: nothing observed yet, c_t applied blind.
    for (int t = 0; t < d_i; ++t) {
        const auto tr = env_->step(initial[static_cast<std::size_t>(t)]);
        actions_.push_back(tr.action);
        true_states_.push_back(tr.next_state);
        true_rewards_.push_back(tr.reward);
        observed_.emplace_back();
        true_return_ += tr.reward;
        trace_.push_back(TraceRow{t, 0, d_i, std::nullopt, std::nullopt, tr.action});
    }

    // The first observation is always delivered: omega_{d_I} = 0.
    t_ = d_i;
    info_.base_state = true_states_.front();
    info_.actions.assign(actions_.begin(), actions_.end());
    info_.z = d_i;
    observed_[0] = true_states_.front();
    delivered_reward_ = true_rewards_.front();
    delivered_return_ = delivered_reward_;
    done_ = false;
    trace_.push_back(TraceRow{t_, 0, info_.z, info_, delivered_reward_, std::nullopt});
    return info_;
}

DelayedStep DelayProcess::step(const Vector& action) {
    if (done_) throw std::logic_error("DelayProcess::step called after the episode finished");
    const auto& spec = env_->spec();
    const int horizon = spec.horizon;
    const int d_i = cfg_.intrinsic_delay;

    DelayedStep out;
    Vector applied = env_->clip_action(action);
    if (t_ < horizon) {
        const auto tr = env_->step(applied);
        true_states_.push_back(tr.next_state);
        true_rewards_.push_back(tr.reward);
        observed_.emplace_back();
        out.true_reward = tr.reward;
        true_return_ += tr.reward;
    }
    actions_.push_back(applied);
    trace_.back().action = applied;

    const int next_t = t_ + 1;
    // While draining (the scheduled state is past the env horizon's last
    // action) every observation is delivered.
    const bool draining = next_t > horizon;
    const bool dropped = !draining && drops_.dropped(next_t);

    const auto delivery = dropped ? Delivery::drop()
                                  : Delivery::fresh(true_states_.at(static_cast<std::size_t>(next_t - d_i)));
    info_ = build_information_state(info_, applied, delivery, cfg_);
    if (!dropped) {
        observed_.at(static_cast<std::size_t>(next_t - d_i)) = delivery.state;
        const int reward_index = next_t - d_i;
        if (reward_index < static_cast<int>(true_rewards_.size()))
            delivered_reward_ = true_rewards_[static_cast<std::size_t>(reward_index)];
    }
    t_ = next_t;
    done_ = t_ >= horizon + d_i;
    if (!done_) delivered_return_ += delivered_reward_;

    trace_.push_back(TraceRow{t_, dropped ? 1 : 0, info_.z, info_, delivered_reward_, std::nullopt});

    out.info = info_;
    out.reward = delivered_reward_;
    out.done = done_;
    out.dropped = dropped;
    return out;
}

void DelayProcess::write_trace(std::ostream& out) const {
    for (const auto& row : trace_) out << to_json(row).dump() << '\n';
}

}  // namespace deer::delay
