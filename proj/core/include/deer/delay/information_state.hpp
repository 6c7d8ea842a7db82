#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "deer/nn/tensor.hpp"

namespace deer::delay {

using nn::Vector;

struct DelayConfig {
    int intrinsic_delay = 1;  // d_I >= 1
    int max_extra = 0;        // d_M >= 0
    double drop_prob = 0.0;   // mu in [0, 1)
    /// The d_I blind actions applied before the first observation. Empty
    /// means zero vectors, or uniform draws when `random_initial_actions`.
    std::vector<Vector> initial_actions;
    bool random_initial_actions = false;
    std::uint64_t seed = 0;

    int max_delay() const { return intrinsic_delay + max_extra; }
    bool constant() const { return drop_prob == 0.0; }
    void validate(int action_dim) const;
};

/// (s_{t-z}, a_{t-z}, ..., a_{t-1}): the latest delivered state plus every
/// action taken since, oldest first.
struct InformationState {
    Vector base_state;
    std::vector<Vector> actions;
    int z = 0;

    bool operator==(const InformationState& other) const;
    void check(const DelayConfig& cfg) const;
};

/// Next random delay value given whether this step's observation dropped.
int update_z(int z_prev, bool dropped, const DelayConfig& cfg);

struct Delivery {
    bool dropped = false;
    Vector state;  // s_{t-d_I}, only meaningful when not dropped

    static Delivery fresh(Vector s) { return {false, std::move(s)}; }
    static Delivery drop() { return {true, {}}; }
};

/// i_t from i_{t-1}, the action a_{t-1} and what arrived at t.
InformationState build_information_state(const InformationState& prev, const Vector& prev_action,
                                          const Delivery& delivery, const DelayConfig& cfg);

/// [state, a_0, ..., a_{z-1}, zeros...] padded to `max_actions` actions.
Vector flatten(const InformationState& info, int max_actions);

nlohmann::json to_json(const InformationState& info);

}  // namespace deer::delay
