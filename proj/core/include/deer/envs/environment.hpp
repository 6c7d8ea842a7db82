#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "deer/nn/tensor.hpp"

namespace deer::envs {

using nn::Matrix;
using nn::Rng;
using nn::Vector;
using nn::Index;

struct EnvSpec {
    std::string name;
    int state_dim = 0;
    int action_dim = 0;
    Vector action_low;
    Vector action_high;
    int horizon = 200;

    void validate() const;
    Vector action_center() const { return 0.5 * (action_low + action_high); }
    Vector action_half_range() const { return 0.5 * (action_high - action_low); }
};

struct Transition {
    Vector state;
    Vector action;  // after clipping to the action bounds
    double reward = 0.0;
    Vector next_state;
    bool done = false;
};

/// Delay-free episodic environment. Instances are single-threaded state
/// machines; `clone()` yields an independent copy including the RNG.
class Environment {
public:
    virtual ~Environment() = default;

    const EnvSpec& spec() const { return spec_; }

    /// Samples the initial state; identical seeds give identical states.
    Vector reset(std::uint64_t seed);

    /// Advances the episode by one step from the current state. Actions
    /// are clipped to bounds; non-finite actions throw.
    Transition step(const Vector& action);

    /// Noise-free dynamics from an arbitrary state, without touching the
    /// episode state.
    Transition simulate(const Vector& state, const Vector& action) const;

    const Vector& state() const { return state_; }
    int elapsed() const { return elapsed_; }
    bool done() const { return elapsed_ >= spec_.horizon; }

    Vector clip_action(const Vector& action) const;

    virtual std::unique_ptr<Environment> clone() const = 0;

protected:
    explicit Environment(EnvSpec spec);

    virtual Vector sample_initial_state(Rng& rng) const = 0;
    /// `noise` is null for the deterministic path.
    virtual Vector next_state(const Vector& state, const Vector& action, Rng* noise) const = 0;
    virtual double reward(const Vector& state, const Vector& action, const Vector& next_state) const = 0;

private:
    EnvSpec spec_;
    Vector state_;
    int elapsed_ = 0;
    Rng rng_;
};

}  // namespace deer::envs
