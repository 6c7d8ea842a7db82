#include "deer/data/samples.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deer/nn/binary_io.hpp"

namespace deer::data {

std::set<int> full_delay_set(int max_delay) {
    std::set<int> out;
    for (int d = 1; d <= max_delay; ++d) out.insert(d);
    return out;
}

std::vector<SampleRef> make_samples(const TrajectoryStore& store, int max_delay, const std::set<int>& delay_set) {
    if (max_delay < 1) throw std::invalid_argument("make_samples: D must be >= 1");
    if (max_delay > 65535) throw std::invalid_argument("make_samples: D too large");
    for (int d : delay_set)
        if (d < 1 || d > max_delay) throw std::invalid_argument("make_samples: delay " + std::to_string(d) + " outside [1, D]");

    std::vector<SampleRef> out;
    for (std::size_t i = 0; i < store.trajectories.size(); ++i) {
        const auto len = store.trajectories[i].steps.size();
        for (std::size_t t = 0; t < len; ++t)
            for (int d : delay_set)
                if (t + static_cast<std::size_t>(d) <= len)
                    out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(t),
                                   static_cast<std::uint16_t>(d)});
    }
    return out;
}

TrainingSample materialize(const TrajectoryStore& store, const SampleRef& ref, int max_delay) {
    const auto& traj = store.trajectories.at(ref.trajectory);
    if (ref.delay < 1 || ref.delay > max_delay || ref.start + ref.delay > traj.steps.size())
        throw std::out_of_range("materialize: sample reference outside its trajectory");
    const auto& first = traj.steps[ref.start];
    TrainingSample s;
    s.delay = ref.delay;
    s.anchor_state = first.state;
    const auto state_dim = first.state.size();
    const auto action_dim = first.action.size();
    for (int k = 0; k < max_delay; ++k) {
        if (k < ref.delay) {
            const auto& step = traj.steps[ref.start + static_cast<std::size_t>(k)];
            s.actions.push_back(step.action);
            s.labels.push_back(step.next_state);
            s.mask.push_back(1);
        } else {
            s.actions.push_back(Vector::Zero(action_dim));
            s.labels.push_back(Vector::Zero(state_dim));
            s.mask.push_back(0);
        }
    }
    return s;
}

std::pair<std::vector<SampleRef>, std::vector<SampleRef>> split(std::vector<SampleRef> samples, double ratio,
                                                                std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split: ratio must be in (0, 1)");
    nn::Rng rng(seed);
    // Fisher-Yates with explicit draws so the permutation is pinned by the seed.
    for (std::size_t i = samples.size(); i > 1; --i) {
        const auto j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
        std::swap(samples[i - 1], samples[j]);
    }
    const auto cut = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(samples.size())));
    std::vector<SampleRef> test(samples.begin() + static_cast<std::ptrdiff_t>(cut), samples.end());
    samples.resize(cut);
    return {std::move(samples), std::move(test)};
}

}  // namespace deer::data
