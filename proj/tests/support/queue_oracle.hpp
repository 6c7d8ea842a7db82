#pragma once

#include <deque>
#include <memory>
#include <vector>

#include "deer/delay/information_state.hpp"
#include "deer/envs/environment.hpp"

namespace deer::testkit {

/// Constant-delay observation model written directly as a FIFO of
/// generated (state, reward) pairs: the agent sees the pair generated d
/// steps ago plus the d actions issued since.
class QueueOracle {
public:
    QueueOracle(std::unique_ptr<envs::Environment> env, int delay) : env_(std::move(env)), delay_(delay) {}

    delay::InformationState reset(std::uint64_t seed, const std::vector<nn::Vector>& initial_actions) {
        states_.clear();
        rewards_.clear();
        window_.clear();
        states_.push_back(env_->reset(seed));
        for (const auto& c : initial_actions) issue(c);
        reward_ = rewards_.front();
        return info();
    }

    struct Step {
        delay::InformationState info;
        double reward;
        bool done;
    };

    Step step(const nn::Vector& action) {
        issue(action);
        states_.pop_front();
        window_.pop_front();
        if (!rewards_.empty()) rewards_.pop_front();
        if (!rewards_.empty()) reward_ = rewards_.front();
        const bool done = env_->done() && rewards_.empty();
        return {info(), reward_, done};
    }

private:
    void issue(const nn::Vector& action) {
        const auto applied = env_->clip_action(action);
        window_.push_back(applied);
        if (env_->done()) return;
        const auto tr = env_->step(applied);
        states_.push_back(tr.next_state);
        rewards_.push_back(tr.reward);
    }

    delay::InformationState info() const {
        delay::InformationState i;
        i.base_state = states_.front();
        i.actions.assign(window_.begin(), window_.end());
        i.z = delay_;
        return i;
    }

    std::unique_ptr<envs::Environment> env_;
    int delay_;
    std::deque<nn::Vector> states_;
    std::deque<double> rewards_;
    std::deque<nn::Vector> window_;
    double reward_ = 0.0;
};

}  // namespace deer::testkit
