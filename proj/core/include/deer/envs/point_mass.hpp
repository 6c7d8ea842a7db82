#pragma once

#include "deer/envs/environment.hpp"

namespace deer::envs {

struct PointMassParams {
    double mass = 1.0;
    double dt = 0.1;
    double drag = 0.1;          // linear velocity damping coefficient
    double arena = 2.0;         // walls at +/- arena on both axes
    double force_limit = 1.0;
    Eigen::Vector2d goal{0.0, 0.0};
    Eigen::Vector2d start{-1.0, -1.0};
    double init_spread = 1.0;   // start position ~ start + uniform(-spread, spread); velocity starts at zero
    double action_penalty = 0.01;
    double noise_std = 0.0;
    int horizon = 200;
};

/// Planar point mass with drag and inelastic walls. State (px, py, vx, vy),
/// action is a force; reward -|pos - goal|^2 - c |a|^2.
class PointMassEnv final : public Environment {
public:
    explicit PointMassEnv(PointMassParams params = {});

    const PointMassParams& params() const { return params_; }
    std::unique_ptr<Environment> clone() const override { return std::make_unique<PointMassEnv>(*this); }

protected:
    Vector sample_initial_state(Rng& rng) const override;
    Vector next_state(const Vector& state, const Vector& action, Rng* noise) const override;
    double reward(const Vector& state, const Vector& action, const Vector& next_state) const override;

private:
    PointMassParams params_;
};

}  // namespace deer::envs
