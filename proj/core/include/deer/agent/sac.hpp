#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "deer/envs/environment.hpp"
#include "deer/envs/expert.hpp"
#include "deer/nn/adam.hpp"
#include "deer/nn/checkpoint.hpp"
#include "deer/nn/mlp.hpp"

namespace deer::agent {

using nn::Matrix;
using nn::Vector;
using nn::Index;

struct SacConfig {
    std::vector<int> hidden{256, 256};
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    double alpha_lr = 3e-4;
    int batch_size = 256;
    double gamma = 0.99;
    double tau = 0.005;
    double initial_alpha = 0.2;
    bool auto_alpha = true;
    std::optional<double> target_entropy;  // defaults to -action_dim
    int buffer_capacity = 100000;
    int training_threshold = 1000;
    int updates_per_step = 1;
    double log_std_min = -20.0;
    double log_std_max = 2.0;

    void validate() const;
};

void to_json(nlohmann::json& j, const SacConfig& c);
void from_json(const nlohmann::json& j, SacConfig& c);

/// Columns are transitions. Actions live in the squashed [-1, 1] space.
struct SacBatch {
    Matrix obs;
    Matrix actions;
    Eigen::RowVectorXd rewards;
    Matrix next_obs;
    Eigen::RowVectorXd dones;

    int size() const { return static_cast<int>(obs.cols()); }
};

struct SacLosses {
    double critic = 0.0;
    double actor = 0.0;
    double alpha_loss = 0.0;
    double alpha = 0.0;
    double entropy = 0.0;  // mean of -log pi over the actor batch
};

/// Reparameterized squashed-Gaussian sample: a = tanh(mean + std * noise).
struct PolicySample {
    Matrix mean;
    Matrix log_std;
    Matrix log_std_raw;
    Matrix pre_tanh;
    Matrix action;               // squashed, in [-1, 1]
    Eigen::RowVectorXd log_prob;
    nn::Mlp::Cache cache;
};

/// Soft actor-critic with twin critics, Polyak-averaged targets and
/// automatic entropy tuning.
class SacAgent {
public:
    SacAgent(int input_dim, const envs::EnvSpec& spec, SacConfig cfg, std::uint64_t seed);

    int input_dim() const { return input_dim_; }
    int action_dim() const { return action_dim_; }
    const SacConfig& config() const { return cfg_; }
    double alpha() const;
    double target_entropy() const;

    /// Env-scale action. Deterministic mode returns the squashed mean.
    Vector act(const Vector& obs, bool deterministic, nn::Rng& rng) const;
    /// Same, in the squashed [-1, 1] space used by the replay buffer.
    Vector act_normalized(const Vector& obs, bool deterministic, nn::Rng& rng) const;
    Vector to_env_action(const Vector& normalized) const;
    Vector to_normalized_action(const Vector& env_action) const;

    /// One gradient step on critics, actor and temperature, then Polyak.
    SacLosses update(const SacBatch& batch, nn::Rng& rng);

    // Loss pieces, exposed for gradient checks. Noise matrices are
    // [action_dim x batch] standard normals.
    PolicySample sample_policy(const Matrix& obs, const Matrix& noise) const;
    Eigen::RowVectorXd critic_targets(const SacBatch& batch, const Matrix& next_noise) const;
    double critic_loss(const SacBatch& batch, const Eigen::RowVectorXd& targets, nn::Mlp* grad1, nn::Mlp* grad2) const;
    double actor_loss(const Matrix& obs, const Matrix& noise, nn::Mlp* grad, Eigen::RowVectorXd* log_prob = nullptr) const;
    /// Temperature loss -mean(log_alpha * (log_pi + target_entropy)); returns
    /// the loss and writes d/d(log_alpha) to `grad`.
    double alpha_loss(const Eigen::RowVectorXd& log_prob, double* grad) const;

    nn::Mlp actor;
    nn::Mlp critic1;
    nn::Mlp critic2;
    nn::Mlp target1;
    nn::Mlp target2;
    double log_alpha = 0.0;
    bool trained = false;

    nn::Checkpoint to_checkpoint() const;
    static SacAgent from_checkpoint(const nn::Checkpoint& ckpt);

private:
    Matrix critic_input(const Matrix& obs, const Matrix& actions) const;

    int input_dim_;
    int action_dim_;
    SacConfig cfg_;
    Vector action_center_;
    Vector action_scale_;
    nn::AdamState actor_opt_;
    nn::AdamState critic1_opt_;
    nn::AdamState critic2_opt_;
    nn::AdamState alpha_opt_;
};

/// Delay-free expert backed by a trained SAC agent acting deterministically.
class SacExpert final : public envs::ExpertPolicy {
public:
    explicit SacExpert(SacAgent agent);
    Vector act(const Vector& state) const override;

private:
    SacAgent agent_;
    mutable nn::Rng rng_{0};
};

}  // namespace deer::agent
