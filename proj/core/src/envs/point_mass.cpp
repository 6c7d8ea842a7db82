#include "deer/envs/point_mass.hpp"

#include <stdexcept>

namespace deer::envs {

namespace {

EnvSpec make_spec(const PointMassParams& p) {
    EnvSpec s;
    s.name = "point_mass";
    s.state_dim = 4;
    s.action_dim = 2;
    s.action_low = Vector::Constant(2, -p.force_limit);
    s.action_high = Vector::Constant(2, p.force_limit);
    s.horizon = p.horizon;
    return s;
}

}  // namespace

PointMassEnv::PointMassEnv(PointMassParams params) : Environment(make_spec(params)), params_(params) {
    if (params_.dt <= 0.0 || params_.mass <= 0.0) throw std::invalid_argument("point mass: dt and mass must be > 0");
    if (params_.noise_std < 0.0 || params_.init_spread < 0.0 || params_.drag < 0.0)
        throw std::invalid_argument("point mass: noise, drag and spread must be >= 0");
}

Vector PointMassEnv::sample_initial_state(Rng& rng) const {
    Vector s = Vector::Zero(4);
    s.head<2>() = params_.start;
    if (params_.init_spread > 0.0) {
        std::uniform_real_distribution<double> dist(-params_.init_spread, params_.init_spread);
        s[0] += dist(rng);
        s[1] += dist(rng);
    }
    s.head<2>() = s.head<2>().cwiseMax(-params_.arena).cwiseMin(params_.arena);
    return s;
}

Vector PointMassEnv::next_state(const Vector& state, const Vector& action, Rng* noise) const {
    const double dt = params_.dt;
    Vector next(4);
    for (int axis = 0; axis < 2; ++axis) {
        double v = state[2 + axis] + dt * (action[axis] / params_.mass - params_.drag * state[2 + axis]);
        if (noise && params_.noise_std > 0.0) v += std::normal_distribution<double>(0.0, params_.noise_std)(*noise);
        double x = state[axis] + dt * v;
        // Inelastic wall: stop at the boundary and kill the normal velocity.
        if (x > params_.arena) {
            x = params_.arena;
            v = 0.0;
        } else if (x < -params_.arena) {
            x = -params_.arena;
            v = 0.0;
        }
        next[axis] = x;
        next[2 + axis] = v;
    }
    return next;
}

double PointMassEnv::reward(const Vector& state, const Vector& action, const Vector&) const {
    const Eigen::Vector2d pos = state.head<2>();
    return -(pos - params_.goal).squaredNorm() - params_.action_penalty * action.squaredNorm();
}

}  // namespace deer::envs
