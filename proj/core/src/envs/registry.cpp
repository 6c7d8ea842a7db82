#include "deer/envs/registry.hpp"

#include <stdexcept>

#include "deer/envs/linear_system.hpp"
#include "deer/envs/pendulum.hpp"
#include "deer/envs/point_mass.hpp"

namespace deer::envs {

using nn::Index;

namespace {

Matrix matrix_from_json(const nlohmann::json& rows) {
    const auto n = static_cast<Index>(rows.size());
    const auto m = n ? static_cast<Index>(rows.at(0).size()) : 0;
    Matrix out(n, m);
    for (Index i = 0; i < n; ++i) {
        if (static_cast<Index>(rows.at(i).size()) != m) throw std::invalid_argument("ragged matrix in env config");
        for (Index j = 0; j < m; ++j) out(i, j) = rows.at(i).at(j).get<double>();
    }
    return out;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

nlohmann::json default_env_config(const std::string& name) {
    if (name == "linear_system") {
        const auto p = LinearSystemParams::double_integrator();
        return {{"name", name},
                {"dt", 0.1},
                {"velocity_decay", 0.9},
                {"state_cost", matrix_to_json(p.state_cost)},
                {"action_cost", matrix_to_json(p.action_cost)},
                {"noise_std", p.noise_std},
                {"init_range", p.init_range},
                {"action_limit", p.action_limit},
                {"horizon", p.horizon}};
    }
    if (name == "point_mass") {
        const PointMassParams p;
        return {{"name", name},
                {"mass", p.mass},
                {"dt", p.dt},
                {"drag", p.drag},
                {"arena", p.arena},
                {"force_limit", p.force_limit},
                {"goal", {p.goal.x(), p.goal.y()}},
                {"start", {p.start.x(), p.start.y()}},
                {"init_spread", p.init_spread},
                {"action_penalty", p.action_penalty},
                {"noise_std", p.noise_std},
                {"horizon", p.horizon}};
    }
    if (name == "pendulum") {
        const PendulumParams p;
        return {{"name", name},
                {"mass", p.mass},
                {"length", p.length},
                {"gravity", p.gravity},
                {"dt", p.dt},
                {"max_torque", p.max_torque},
                {"max_speed", p.max_speed},
                {"init_speed", p.init_speed},
                {"noise_std", p.noise_std},
                {"horizon", p.horizon}};
    }
    throw std::invalid_argument("unknown environment '" + name + "' (expected linear_system, point_mass or pendulum)");
}

std::unique_ptr<Environment> make_environment(const nlohmann::json& config) {
    const auto name = config.at("name").get<std::string>();
    nlohmann::json c = default_env_config(name);
    c.merge_patch(config);

    if (name == "linear_system") {
        auto p = LinearSystemParams::double_integrator(c.at("dt").get<double>(), c.at("velocity_decay").get<double>());
        if (c.contains("a")) p.a = matrix_from_json(c.at("a"));
        if (c.contains("b")) p.b = matrix_from_json(c.at("b"));
        p.state_cost = matrix_from_json(c.at("state_cost"));
        p.action_cost = matrix_from_json(c.at("action_cost"));
        p.goal = Vector::Zero(p.a.rows());
        if (c.contains("goal")) {
            const auto goal = c.at("goal").get<std::vector<double>>();
            p.goal = Eigen::Map<const Vector>(goal.data(), static_cast<Index>(goal.size()));
        }
        p.noise_std = c.at("noise_std").get<double>();
        p.init_range = c.at("init_range").get<double>();
        p.action_limit = c.at("action_limit").get<double>();
        p.horizon = c.at("horizon").get<int>();
        return std::make_unique<LinearSystemEnv>(std::move(p));
    }
    if (name == "point_mass") {
        PointMassParams p;
        p.mass = c.at("mass").get<double>();
        p.dt = c.at("dt").get<double>();
        p.drag = c.at("drag").get<double>();
        p.arena = c.at("arena").get<double>();
        p.force_limit = c.at("force_limit").get<double>();
        const auto goal = c.at("goal").get<std::vector<double>>();
        const auto start = c.at("start").get<std::vector<double>>();
        if (goal.size() != 2 || start.size() != 2) throw std::invalid_argument("point_mass: goal/start must be 2-D");
        p.goal = {goal[0], goal[1]};
        p.start = {start[0], start[1]};
        p.init_spread = c.at("init_spread").get<double>();
        p.action_penalty = c.at("action_penalty").get<double>();
        p.noise_std = c.at("noise_std").get<double>();
        p.horizon = c.at("horizon").get<int>();
        return std::make_unique<PointMassEnv>(p);
    }
    PendulumParams p;
    p.mass = c.at("mass").get<double>();
    p.length = c.at("length").get<double>();
    p.gravity = c.at("gravity").get<double>();
    p.dt = c.at("dt").get<double>();
    p.max_torque = c.at("max_torque").get<double>();
    p.max_speed = c.at("max_speed").get<double>();
    p.init_speed = c.at("init_speed").get<double>();
    p.noise_std = c.at("noise_std").get<double>();
    p.horizon = c.at("horizon").get<int>();
    return std::make_unique<PendulumEnv>(p);
}

}  // namespace deer::envs
