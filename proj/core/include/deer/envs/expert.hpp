#pragma once

#include <memory>

#include "deer/envs/environment.hpp"
#include "deer/envs/linear_system.hpp"

namespace deer::envs {

/// Delay-free policy used to produce expert trajectories.
class ExpertPolicy {
public:
    virtual ~ExpertPolicy() = default;
    /// Returns an action within the environment bounds.
    virtual Vector act(const Vector& state) const = 0;
};

/// u = clip(-K (x - goal)) with K the infinite-horizon LQR gain.
class LqrExpert final : public ExpertPolicy {
public:
    explicit LqrExpert(const LinearSystemParams& params);

    Vector act(const Vector& state) const override;
    const Matrix& gain() const { return gain_; }

private:
    Matrix gain_;
    Vector goal_;
    double limit_;
};

inline Vector expert_action(const ExpertPolicy& policy, const Vector& state) { return policy.act(state); }

}  // namespace deer::envs
