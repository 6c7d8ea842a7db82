#include "deer/envs/expert.hpp"

#include "deer/envs/lqr.hpp"

namespace deer::envs {

LqrExpert::LqrExpert(const LinearSystemParams& params)
    : gain_(solve_lqr(params.a, params.b, params.state_cost, params.action_cost).gain),
      goal_(params.goal),
      limit_(params.action_limit) {}

Vector LqrExpert::act(const Vector& state) const {
    Vector u = -gain_ * (state - goal_);
    return u.cwiseMax(-limit_).cwiseMin(limit_);
}

}  // namespace deer::envs
