#include "deer/delay/information_state.hpp"

#include <stdexcept>
#include <string>

namespace deer::delay {

void DelayConfig::validate(int action_dim) const {
    if (intrinsic_delay < 1) throw std::invalid_argument("delay config: intrinsic delay must be >= 1");
    if (max_extra < 0) throw std::invalid_argument("delay config: max extra dropping steps must be >= 0");
    if (!(drop_prob >= 0.0 && drop_prob < 1.0)) throw std::invalid_argument("delay config: drop probability must be in [0, 1)");
    if (!initial_actions.empty()) {
        if (static_cast<int>(initial_actions.size()) != intrinsic_delay)
            throw std::invalid_argument("delay config: need exactly d_I initial actions, got " +
                                        std::to_string(initial_actions.size()));
        for (const auto& a : initial_actions)
            if (a.size() != action_dim) throw nn::ShapeError("delay config: initial action has wrong dimension");
    }
}

bool InformationState::operator==(const InformationState& other) const {
    if (z != other.z || actions.size() != other.actions.size() || base_state.size() != other.base_state.size())
        return false;
    if (base_state != other.base_state) return false;
    for (std::size_t i = 0; i < actions.size(); ++i)
        if (actions[i].size() != other.actions[i].size() || actions[i] != other.actions[i]) return false;
    return true;
}

void InformationState::check(const DelayConfig& cfg) const {
    if (z < cfg.intrinsic_delay || z > cfg.max_delay())
        throw std::logic_error("information state: z=" + std::to_string(z) + " outside [d_I, d_I + d_M]");
    if (static_cast<int>(actions.size()) != z)
        throw std::logic_error("information state: holds " + std::to_string(actions.size()) + " actions for z=" +
                               std::to_string(z));
}

int update_z(int z_prev, bool dropped, const DelayConfig& cfg) {
    if (z_prev < cfg.intrinsic_delay || z_prev > cfg.max_delay())
        throw std::out_of_range("update_z: z_prev=" + std::to_string(z_prev) + " outside [" +
                                std::to_string(cfg.intrinsic_delay) + ", " + std::to_string(cfg.max_delay()) + "]");
    if (!dropped) return cfg.intrinsic_delay;
    return z_prev < cfg.max_delay() ? z_prev + 1 : cfg.max_delay();
}

InformationState build_information_state(const InformationState& prev, const Vector& prev_action,
                                          const Delivery& delivery, const DelayConfig& cfg) {
    InformationState next;
    next.z = update_z(prev.z, delivery.dropped, cfg);

    // Every case keeps the newest z actions of (prev.actions, a_{t-1}).
    std::vector<Vector> window = prev.actions;
    window.push_back(prev_action);
    if (static_cast<int>(window.size()) < next.z)
        throw std::logic_error("build_information_state: action history underflow");
    next.actions.assign(window.end() - next.z, window.end());

    if (delivery.dropped) {
        next.base_state = prev.base_state;
    } else {
        if (delivery.state.size() != prev.base_state.size())
            throw nn::ShapeError("build_information_state: delivered state has wrong dimension");
        next.base_state = delivery.state;
    }
    return next;
}

Vector flatten(const InformationState& info, int max_actions) {
    if (static_cast<int>(info.actions.size()) > max_actions)
        throw nn::ShapeError("flatten: information state holds more actions than the padded width");
    const auto action_dim = info.actions.empty() ? 0 : info.actions.front().size();
    Vector out = Vector::Zero(info.base_state.size() + max_actions * action_dim);
    out.head(info.base_state.size()) = info.base_state;
    for (std::size_t i = 0; i < info.actions.size(); ++i)
        out.segment(info.base_state.size() + static_cast<nn::Index>(i) * action_dim, action_dim) = info.actions[i];
    return out;
}

nlohmann::json to_json(const InformationState& info) {
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& a : info.actions) actions.push_back(vec(a));
    return {{"base_state", vec(info.base_state)}, {"actions", actions}, {"z", info.z}};
}

}  // namespace deer::delay
