#include "deer/envs/linear_system.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace deer::envs {

namespace {

EnvSpec make_spec(const LinearSystemParams& p) {
    EnvSpec s;
    s.name = "linear_system";
    s.state_dim = static_cast<int>(p.a.rows());
    s.action_dim = static_cast<int>(p.b.cols());
    s.action_low = Vector::Constant(s.action_dim, -p.action_limit);
    s.action_high = Vector::Constant(s.action_dim, p.action_limit);
    s.horizon = p.horizon;
    return s;
}

}  // namespace

double spectral_radius(const Matrix& m) {
    Eigen::EigenSolver<Matrix> solver(m, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

LinearSystemParams LinearSystemParams::double_integrator(double dt, double velocity_decay) {
    LinearSystemParams p;
    p.a = Matrix::Identity(4, 4);
    p.a(0, 2) = dt;
    p.a(1, 3) = dt;
    p.a(2, 2) = velocity_decay;
    p.a(3, 3) = velocity_decay;
    p.b = Matrix::Zero(4, 2);
    p.b(0, 0) = 0.5 * dt * dt;
    p.b(1, 1) = 0.5 * dt * dt;
    p.b(2, 0) = dt;
    p.b(3, 1) = dt;
    p.state_cost = Eigen::Vector4d(1.0, 1.0, 0.1, 0.1).asDiagonal();
    p.action_cost = 0.1 * Matrix::Identity(2, 2);
    p.goal = Vector::Zero(4);
    return p;
}

LinearSystemEnv::LinearSystemEnv(LinearSystemParams params) : Environment(make_spec(params)), params_(std::move(params)) {
    const auto& p = params_;
    const Index n = p.a.rows();
    if (p.a.cols() != n || p.b.rows() != n) throw nn::ShapeError("linear system: A must be square and match B rows");
    if (p.state_cost.rows() != n || p.state_cost.cols() != n) throw nn::ShapeError("linear system: Q shape");
    if (p.action_cost.rows() != p.b.cols() || p.action_cost.cols() != p.b.cols())
        throw nn::ShapeError("linear system: R shape");
    if (p.goal.size() != n) throw nn::ShapeError("linear system: goal dimension");
    if (p.noise_std < 0.0) throw std::invalid_argument("linear system: noise_std must be >= 0");
    if (spectral_radius(p.a) > 1.05) throw std::invalid_argument("linear system: spectral radius of A exceeds 1.05");
}

Vector LinearSystemEnv::sample_initial_state(Rng& rng) const {
    std::uniform_real_distribution<double> dist(-params_.init_range, params_.init_range);
    Vector x(params_.a.rows());
    for (Index i = 0; i < x.size(); ++i) x[i] = dist(rng);
    return x;
}

Vector LinearSystemEnv::next_state(const Vector& state, const Vector& action, Rng* noise) const {
    Vector next = params_.a * state + params_.b * action;
    if (noise && params_.noise_std > 0.0) {
        std::normal_distribution<double> n(0.0, params_.noise_std);
        for (Index i = 0; i < next.size(); ++i) next[i] += n(*noise);
    }
    return next;
}

double LinearSystemEnv::reward(const Vector& state, const Vector& action, const Vector&) const {
    const Vector e = state - params_.goal;
    return -(e.dot(params_.state_cost * e) + action.dot(params_.action_cost * action));
}

}  // namespace deer::envs
