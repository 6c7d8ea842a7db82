#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "deer/agent/runners.hpp"
#include "deer/delay/information_state.hpp"
#include "deer/envs/environment.hpp"
#include "deer/s2s/model.hpp"
#include "deer/s2s/training.hpp"

namespace deer::exp {

/// One delay setting of the grid. Delay-free cells run plain SAC.
struct Cell {
    std::string name;
    bool delay_free = false;
    delay::DelayConfig delay;
};

struct RandomDelay {
    int intrinsic = 1;
    int max_extra = 0;
    double drop_prob = 0.0;
};

struct ExperimentConfig {
    nlohmann::json materialized;  // every default filled in
    std::string hash;             // over `materialized` without seeds and modes

    nlohmann::json env;
    std::filesystem::path output_dir;

    std::vector<int> constant_delays;
    std::vector<RandomDelay> random_delays;

    int dataset_random = 500;
    int dataset_expert = 10;
    std::string expert_policy;  // lqr | sac
    int expert_steps = 20000;
    int expert_eval_episodes = 10;
    double split_ratio = 0.9;
    std::uint64_t dataset_seed = 0;

    std::vector<int> hidden_sizes;  // K1 values; more than one makes a dimension sweep
    int embed = 64;
    int max_delay = 8;
    double teacher_forcing = 0.5;
    s2s::PretrainConfig pretrain;

    agent::RunConfig run;
    std::vector<agent::Mode> modes;
    std::vector<std::uint64_t> seeds;

    std::vector<Cell> cells() const;
    s2s::Seq2SeqConfig seq2seq(int hidden, const envs::EnvSpec& spec) const;
    std::unique_ptr<envs::Environment> make_env() const;
};

/// The full schema with default values.
nlohmann::json default_config();

/// Merges `user` onto the defaults, rejects unknown keys and inconsistent
/// settings, and fills the typed view. `base_dir` resolves a relative
/// output_dir.
ExperimentConfig parse_config(const nlohmann::json& user, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);
/// Hex FNV-1a of the canonical (sorted-key, compact) JSON.
std::string json_hash(const nlohmann::json& j);
std::string file_hash(const std::filesystem::path& path);

}  // namespace deer::exp
