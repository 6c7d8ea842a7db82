#include "deer/envs/environment.hpp"

#include <stdexcept>

namespace deer::envs {

void EnvSpec::validate() const {
    if (state_dim <= 0 || action_dim <= 0) throw std::invalid_argument("env spec: dimensions must be positive");
    if (horizon <= 0) throw std::invalid_argument("env spec: horizon must be positive");
    if (action_low.size() != action_dim || action_high.size() != action_dim)
        throw std::invalid_argument("env spec: action bounds do not match action_dim");
    if (!action_low.allFinite() || !action_high.allFinite() || (action_low.array() >= action_high.array()).any())
        throw std::invalid_argument("env spec: action bounds must be finite with low < high");
}

Environment::Environment(EnvSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    state_ = Vector::Zero(spec_.state_dim);
}

Vector Environment::reset(std::uint64_t seed) {
    rng_.seed(seed);
    state_ = sample_initial_state(rng_);
    elapsed_ = 0;
    return state_;
}

Vector Environment::clip_action(const Vector& action) const {
    if (action.size() != spec_.action_dim)
        throw nn::ShapeError("action has length " + std::to_string(action.size()) + ", env expects " +
                             std::to_string(spec_.action_dim));
    if (!action.allFinite()) throw std::invalid_argument("non-finite action");
    return action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
}

Transition Environment::step(const Vector& action) {
    if (done()) throw std::logic_error("step called after the episode horizon");
    Transition t;
    t.state = state_;
    t.action = clip_action(action);
    t.next_state = next_state(state_, t.action, &rng_);
    t.reward = reward(t.state, t.action, t.next_state);
    ++elapsed_;
    t.done = done();
    state_ = t.next_state;
    return t;
}

Transition Environment::simulate(const Vector& state, const Vector& action) const {
    if (state.size() != spec_.state_dim) throw nn::ShapeError("simulate: state dimension mismatch");
    Transition t;
    t.state = state;
    t.action = clip_action(action);
    t.next_state = next_state(state, t.action, nullptr);
    t.reward = reward(t.state, t.action, t.next_state);
    return t;
}

}  // namespace deer::envs
