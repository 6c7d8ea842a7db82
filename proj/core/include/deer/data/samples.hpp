#pragma once

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "deer/data/trajectory_store.hpp"

namespace deer::data {

/// Index of one supervised sample inside a TrajectoryStore: anchor state
/// s_start, actions a_start..a_{start+delay-1}, labels s_{start+1}..s_{start+delay}.
struct SampleRef {
    std::uint32_t trajectory = 0;
    std::uint32_t start = 0;
    std::uint16_t delay = 0;

    bool operator==(const SampleRef&) const = default;
};

/// Materialized, zero-padded sample of width D.
struct TrainingSample {
    Vector anchor_state;
    std::vector<Vector> actions;  // D entries, zero beyond `delay`
    std::vector<Vector> labels;   // D entries, zero (and masked) beyond `delay`
    std::vector<int> mask;        // D entries, 1 for the first `delay`
    int delay = 0;
};

/// For every position t and every d in `delay_set` with t + d inside the
/// trajectory, one sample. Positions are emitted in (trajectory, t, d) order.
std::vector<SampleRef> make_samples(const TrajectoryStore& store, int max_delay, const std::set<int>& delay_set);

TrainingSample materialize(const TrajectoryStore& store, const SampleRef& ref, int max_delay);

/// Seeded shuffle then cut: train gets round(ratio * n) samples.
std::pair<std::vector<SampleRef>, std::vector<SampleRef>> split(std::vector<SampleRef> samples, double ratio,
                                                                std::uint64_t seed);

/// {1, ..., max_delay}
std::set<int> full_delay_set(int max_delay);

}  // namespace deer::data
