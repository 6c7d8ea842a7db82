#pragma once

#include "deer/envs/environment.hpp"

namespace deer::envs {

struct PendulumParams {
    double mass = 1.0;
    double length = 1.0;
    double gravity = 10.0;
    double dt = 0.05;
    double max_torque = 2.0;
    double max_speed = 8.0;
    double init_speed = 1.0;  // initial angular velocity ~ uniform(-init_speed, init_speed)
    double noise_std = 0.0;   // added to the angular velocity update
    int horizon = 200;
};

/// Torque-limited swing-up pendulum. The state is (cos th, sin th, th_dot),
/// th = 0 upright; integration is semi-implicit Euler (velocity first).
/// Reward -(th^2 + 0.1 th_dot^2 + 0.001 u^2) with th wrapped to [-pi, pi).
class PendulumEnv final : public Environment {
public:
    explicit PendulumEnv(PendulumParams params = {});

    const PendulumParams& params() const { return params_; }
    std::unique_ptr<Environment> clone() const override { return std::make_unique<PendulumEnv>(*this); }

    static double angle(const Vector& state);
    /// Mechanical energy of a uniform rod pivoting at one end.
    double energy(const Vector& state) const;

protected:
    Vector sample_initial_state(Rng& rng) const override;
    Vector next_state(const Vector& state, const Vector& action, Rng* noise) const override;
    double reward(const Vector& state, const Vector& action, const Vector& next_state) const override;

private:
    PendulumParams params_;
};

double wrap_angle(double theta);

}  // namespace deer::envs
