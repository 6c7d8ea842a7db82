#include "deer/data/trajectory_store.hpp"

#include <stdexcept>

#include "deer/nn/binary_io.hpp"

namespace deer::data {

std::string to_string(Provenance p) { return p == Provenance::expert ? "expert" : "random"; }

std::size_t TrajectoryStore::count(Provenance p) const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.provenance == p ? 1 : 0;
    return n;
}

std::size_t TrajectoryStore::num_transitions() const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.steps.size();
    return n;
}

void TrajectoryStore::validate(int state_dim, int action_dim) const {
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const auto& steps = trajectories[i].steps;
        for (std::size_t k = 0; k < steps.size(); ++k) {
            const auto& s = steps[k];
            if (s.state.size() != state_dim || s.next_state.size() != state_dim || s.action.size() != action_dim)
                throw std::runtime_error("trajectory " + std::to_string(i) + ": dimension mismatch at step " +
                                         std::to_string(k));
            if (k > 0 && steps[k - 1].next_state != s.state)
                throw std::runtime_error("trajectory " + std::to_string(i) + ": broken state chain at step " +
                                         std::to_string(k));
        }
    }
}

void TrajectoryStore::append(TrajectoryStore other) {
    for (auto& t : other.trajectories) trajectories.push_back(std::move(t));
}

TrajectoryStore collect(const envs::Environment& prototype, CollectPolicy policy, int n, std::uint64_t seed,
                        const envs::ExpertPolicy* expert) {
    if (n < 0) throw std::invalid_argument("collect: negative trajectory count");
    if (policy == CollectPolicy::expert && expert == nullptr)
        throw std::invalid_argument("collect: expert collection needs an expert policy");

    TrajectoryStore store;
    auto env = prototype.clone();
    const auto& spec = env->spec();
    nn::Rng action_rng(nn::derive_seed(seed, 0xac710));
    for (int i = 0; i < n; ++i) {
        Trajectory traj;
        traj.provenance = policy == CollectPolicy::expert ? Provenance::expert : Provenance::random;
        Vector state = env->reset(nn::derive_seed(seed, static_cast<std::uint64_t>(i)));
        while (!env->done()) {
            Vector action(spec.action_dim);
            if (policy == CollectPolicy::expert) {
                action = expert->act(state);
            } else {
                for (int k = 0; k < spec.action_dim; ++k)
                    action[k] = std::uniform_real_distribution<double>(spec.action_low[k], spec.action_high[k])(action_rng);
            }
            auto tr = env->step(action);
            state = tr.next_state;
            traj.steps.push_back(std::move(tr));
        }
        store.trajectories.push_back(std::move(traj));
    }
    return store;
}

}  // namespace deer::data
