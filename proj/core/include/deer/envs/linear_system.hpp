#pragma once

#include "deer/envs/environment.hpp"

namespace deer::envs {

struct LinearSystemParams {
    Matrix a;
    Matrix b;
    Matrix state_cost;   // Q
    Matrix action_cost;  // R
    Vector goal;
    double noise_std = 0.0;
    double init_range = 1.0;  // initial state ~ uniform(-init_range, init_range) per dimension
    int horizon = 200;
    double action_limit = 1.0;

    /// Planar double integrator: state (px, py, vx, vy), action (ax, ay).
    static LinearSystemParams double_integrator(double dt = 0.1, double velocity_decay = 0.9);
};

/// x' = A x + B u + noise, reward -(x-g)^T Q (x-g) - u^T R u.
class LinearSystemEnv final : public Environment {
public:
    explicit LinearSystemEnv(LinearSystemParams params);

    const LinearSystemParams& params() const { return params_; }
    std::unique_ptr<Environment> clone() const override { return std::make_unique<LinearSystemEnv>(*this); }

protected:
    Vector sample_initial_state(Rng& rng) const override;
    Vector next_state(const Vector& state, const Vector& action, Rng* noise) const override;
    double reward(const Vector& state, const Vector& action, const Vector& next_state) const override;

private:
    LinearSystemParams params_;
};

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const Matrix& m);

}  // namespace deer::envs
