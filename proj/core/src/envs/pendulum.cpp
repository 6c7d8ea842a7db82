#include "deer/envs/pendulum.hpp"

#include <cmath>
#include <numbers>
#include <algorithm>
#include <stdexcept>

namespace deer::envs {

namespace {

EnvSpec make_spec(const PendulumParams& p) {
    EnvSpec s;
    s.name = "pendulum";
    s.state_dim = 3;
    s.action_dim = 1;
    s.action_low = Vector::Constant(1, -p.max_torque);
    s.action_high = Vector::Constant(1, p.max_torque);
    s.horizon = p.horizon;
    return s;
}

Vector pack(double theta, double theta_dot) {
    Vector s(3);
    s << std::cos(theta), std::sin(theta), theta_dot;
    return s;
}

}  // namespace

double wrap_angle(double theta) {
    constexpr double pi = std::numbers::pi;
    double t = std::fmod(theta + pi, 2.0 * pi);
    if (t < 0.0) t += 2.0 * pi;
    return t - pi;
}

PendulumEnv::PendulumEnv(PendulumParams params) : Environment(make_spec(params)), params_(params) {
    if (params_.dt <= 0.0) throw std::invalid_argument("pendulum: dt must be > 0");
    if (params_.noise_std < 0.0) throw std::invalid_argument("pendulum: noise_std must be >= 0");
}

double PendulumEnv::angle(const Vector& state) { return std::atan2(state[1], state[0]); }

double PendulumEnv::energy(const Vector& state) const {
    const double m = params_.mass;
    const double l = params_.length;
    // Kinetic (1/6) m l^2 w^2 plus potential m g (l/2) cos th, upright = maximum.
    return m * l * l * state[2] * state[2] / 6.0 + 0.5 * m * params_.gravity * l * state[0];
}

Vector PendulumEnv::sample_initial_state(Rng& rng) const {
    std::uniform_real_distribution<double> angle_dist(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> speed_dist(-params_.init_speed, params_.init_speed);
    const double theta = angle_dist(rng);
    const double theta_dot = params_.init_speed > 0.0 ? speed_dist(rng) : 0.0;
    return pack(theta, theta_dot);
}

Vector PendulumEnv::next_state(const Vector& state, const Vector& action, Rng* noise) const {
    const auto& p = params_;
    const double theta = angle(state);
    double theta_dot = state[2];
    const double accel =
        3.0 * p.gravity / (2.0 * p.length) * std::sin(theta) + 3.0 / (p.mass * p.length * p.length) * action[0];
    theta_dot += accel * p.dt;
    if (noise && p.noise_std > 0.0) theta_dot += std::normal_distribution<double>(0.0, p.noise_std)(*noise);
    theta_dot = std::clamp(theta_dot, -p.max_speed, p.max_speed);
    return pack(theta + theta_dot * p.dt, theta_dot);
}

double PendulumEnv::reward(const Vector& state, const Vector& action, const Vector&) const {
    const double th = wrap_angle(angle(state));
    return -(th * th + 0.1 * state[2] * state[2] + 0.001 * action[0] * action[0]);
}

}  // namespace deer::envs
