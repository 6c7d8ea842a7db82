#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "deer/envs/environment.hpp"
#include "deer/envs/expert.hpp"

namespace deer::data {

using nn::Vector;

enum class Provenance : std::uint8_t { random = 0, expert = 1 };

std::string to_string(Provenance p);

struct Trajectory {
    std::vector<envs::Transition> steps;
    Provenance provenance = Provenance::random;

    /// Number of states, i.e. steps + 1.
    std::size_t num_states() const { return steps.empty() ? 0 : steps.size() + 1; }
    const Vector& state(std::size_t i) const { return i == 0 ? steps.front().state : steps[i - 1].next_state; }
};

struct TrajectoryStore {
    std::vector<Trajectory> trajectories;

    std::size_t count(Provenance p) const;
    std::size_t num_transitions() const;
    /// Checks the next_state chain and dimension consistency; throws on violation.
    void validate(int state_dim, int action_dim) const;
    void append(TrajectoryStore other);
};

enum class CollectPolicy { random, expert };

/// Rolls out `n` full-horizon episodes. Episode i resets the env with
/// derive_seed(seed, i); random actions are uniform within the bounds.
/// `expert` is required for CollectPolicy::expert.
TrajectoryStore collect(const envs::Environment& env, CollectPolicy policy, int n, std::uint64_t seed,
                        const envs::ExpertPolicy* expert = nullptr);

}  // namespace deer::data
