#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "deer/agent/sac.hpp"
#include "deer/delay/information_state.hpp"
#include "deer/s2s/model.hpp"
#include "deer/s2s/training.hpp"

namespace deer::agent {

enum class Mode { deer, sacas, dolps, online_deer };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& name);

struct OnlineConfig {
    int retrain_period = 20000;  // env steps between encoder refits; <= 0 never refits
    s2s::Seq2SeqConfig model;    // dims are filled from the env
    s2s::PretrainConfig training;
};

struct RunConfig {
    SacConfig sac;
    int total_steps = 50000;  // rounded up to whole episodes
    int eval_episodes = 5;
    std::uint64_t seed = 0;
    OnlineConfig online;
};

struct CurvePoint {
    long step = 0;
    int episode = 0;
    bool eval = false;
    double return_true = 0.0;
    double return_delivered = 0.0;
    SacLosses losses;  // mean over the episode's updates
    int updates = 0;
};

struct RunResult {
    std::vector<CurvePoint> curve;
    double final_return = 0.0;  // mean true return of the deterministic evaluation episodes
    std::optional<SacAgent> agent;
    std::optional<s2s::Seq2SeqModel> encoder;  // online-DEER's final encoder
    long encode_calls = 0;
    long env_steps = 0;
    int episodes = 0;
    int input_dim = 0;
    /// Lengths of the policy inputs stored in the replay buffer.
    std::vector<int> replay_input_lengths;
};

/// Standard SAC on raw undelayed states (the zero-delay reference).
RunResult run_delay_free(const envs::Environment& env, const RunConfig& cfg);

/// Policy input = frozen encoder representation of the information state.
RunResult run_deer(const envs::Environment& env, const delay::DelayConfig& delay, const s2s::Seq2SeqModel& encoder,
                   const RunConfig& cfg);

/// Policy input = flattened information state, zero-padded to d_I + d_M actions.
RunResult run_sacas(const envs::Environment& env, const delay::DelayConfig& delay, const RunConfig& cfg);

/// Policy input = the decoder's last predicted state.
RunResult run_dolps(const envs::Environment& env, const delay::DelayConfig& delay, const s2s::Seq2SeqModel& model,
                    const RunConfig& cfg);

/// Encoder starts random and is refit on the observed interaction data
/// every `retrain_period` steps; stored representations are not recomputed.
RunResult run_online_deer(const envs::Environment& env, const delay::DelayConfig& delay, const RunConfig& cfg);

/// Deterministic evaluation episodes of an already trained DEER-style policy.
std::vector<double> evaluate_policy(const envs::Environment& env, const std::optional<delay::DelayConfig>& delay,
                                    Mode mode, const SacAgent& agent, const s2s::Seq2SeqModel* model, int episodes,
                                    std::uint64_t seed);

nlohmann::json to_json(const CurvePoint& p);
void write_curve(std::ostream& out, const std::vector<CurvePoint>& curve, const nlohmann::json& extra = {});

}  // namespace deer::agent
