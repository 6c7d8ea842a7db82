#include "deer/exp/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "deer/envs/registry.hpp"
#include "deer/nn/binary_io.hpp"

namespace deer::exp {

namespace {

void reject_unknown(const nlohmann::json& user, const nlohmann::json& schema, const std::string& path) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!schema.contains(it.key())) throw std::invalid_argument("config: unknown key '" + key + "'");
        if (key == "env") continue;
        const auto& s = schema.at(it.key());
        if (s.is_object()) {
            if (!it.value().is_object()) throw std::invalid_argument("config: '" + key + "' must be an object");
            reject_unknown(it.value(), s, key);
        }
    }
}

void reject_unknown_env(const nlohmann::json& env) {
    const auto defaults = envs::default_env_config(env.at("name").get<std::string>());
    std::set<std::string> extra;
    if (env.at("name") == "linear_system") extra = {"a", "b", "goal"};
    for (auto it = env.begin(); it != env.end(); ++it)
        if (!defaults.contains(it.key()) && !extra.count(it.key()))
            throw std::invalid_argument("config: unknown key 'env." + it.key() + "'");
}

template <typename T>
T get(const nlohmann::json& j, const char* section, const char* key) {
    try {
        return j.at(section).at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument(std::string("config: '") + section + "." + key + "' has the wrong type");
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("config: " + what);
}

std::string format_mu(double mu) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", mu);
    return buf;
}

}  // namespace

nlohmann::json default_config() {
    nlohmann::json sac;
    agent::to_json(sac, agent::SacConfig{});
    sac["total_steps"] = 50000;
    sac["eval_episodes"] = 5;
    sac["retrain_period"] = 20000;
    sac["online_epochs"] = 2;
    sac["online_max_batches"] = 0;

    const s2s::PretrainConfig pre;
    const s2s::Seq2SeqConfig model;
    return {{"env", {{"name", "linear_system"}}},
            {"output_dir", "runs"},
            {"delays",
             {{"constant", {0, 1, 2, 4, 6, 8}},
              {"random", {{2, 4, 0.2}, {2, 4, 0.4}, {2, 4, 0.6}}}}},
            {"dataset",
             {{"random", 500},
              {"expert", 10},
              {"expert_policy", "auto"},
              {"expert_steps", 20000},
              {"expert_eval_episodes", 10},
              {"split", 0.9},
              {"seed", 0}}},
            {"seq2seq",
             {{"hidden", {model.hidden}},
              {"embed", model.embed},
              {"max_delay", model.max_delay},
              {"teacher_forcing", model.teacher_forcing},
              {"epochs", pre.epochs},
              {"batch_size", pre.batch_size},
              {"learning_rate", pre.learning_rate},
              {"final_lr_fraction", pre.final_lr_fraction},
              {"grad_clip", pre.grad_clip},
              {"max_batches_per_epoch", pre.max_batches_per_epoch},
              {"seed", 0}}},
            {"agent", sac},
            {"modes", {"deer", "sacas", "dolps", "online-deer"}},
            {"seeds", {0, 1, 2, 3, 4}}};
}

namespace {

ExperimentConfig parse_checked(const nlohmann::json& user, const std::filesystem::path& base_dir) {
    require(user.is_object(), "top level must be an object");
    nlohmann::json m = default_config();
    reject_unknown(user, m, "");

    nlohmann::json u = user;
    if (u.contains("seq2seq") && u["seq2seq"].contains("hidden") && u["seq2seq"]["hidden"].is_number())
        u["seq2seq"]["hidden"] = nlohmann::json::array({u["seq2seq"]["hidden"]});
    // Arrays replace wholesale; objects merge key by key.
    const nlohmann::json env_user = u.value("env", nlohmann::json::object());
    u.erase("env");
    m.merge_patch(u);
    require(env_user.is_object(), "'env' must be an object");
    const std::string env_name = env_user.value("name", std::string("linear_system"));
    m["env"] = envs::default_env_config(env_name);
    nlohmann::json env_patch = env_user;
    env_patch["name"] = env_name;
    reject_unknown_env(env_patch);
    m["env"].merge_patch(env_patch);

    ExperimentConfig c;
    c.env = m["env"];
    auto probe = envs::make_environment(c.env);

    std::filesystem::path out = m.at("output_dir").get<std::string>();
    c.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;

    c.constant_delays = get<std::vector<int>>(m, "delays", "constant");
    for (const auto& t : m.at("delays").at("random")) {
        require(t.is_array() && t.size() == 3, "each random delay must be [d_I, d_M, mu]");
        c.random_delays.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<double>()});
    }

    c.dataset_random = get<int>(m, "dataset", "random");
    c.dataset_expert = get<int>(m, "dataset", "expert");
    c.expert_policy = get<std::string>(m, "dataset", "expert_policy");
    if (c.expert_policy == "auto") c.expert_policy = env_name == "linear_system" ? "lqr" : "sac";
    m["dataset"]["expert_policy"] = c.expert_policy;
    c.expert_steps = get<int>(m, "dataset", "expert_steps");
    c.expert_eval_episodes = get<int>(m, "dataset", "expert_eval_episodes");
    c.split_ratio = get<double>(m, "dataset", "split");
    c.dataset_seed = get<std::uint64_t>(m, "dataset", "seed");

    c.hidden_sizes = get<std::vector<int>>(m, "seq2seq", "hidden");
    c.embed = get<int>(m, "seq2seq", "embed");
    c.max_delay = get<int>(m, "seq2seq", "max_delay");
    c.teacher_forcing = get<double>(m, "seq2seq", "teacher_forcing");
    c.pretrain.epochs = get<int>(m, "seq2seq", "epochs");
    c.pretrain.batch_size = get<int>(m, "seq2seq", "batch_size");
    c.pretrain.learning_rate = get<double>(m, "seq2seq", "learning_rate");
    c.pretrain.grad_clip = get<double>(m, "seq2seq", "grad_clip");
    c.pretrain.final_lr_fraction = get<double>(m, "seq2seq", "final_lr_fraction");
    c.pretrain.max_batches_per_epoch = get<int>(m, "seq2seq", "max_batches_per_epoch");
    c.pretrain.seed = get<std::uint64_t>(m, "seq2seq", "seed");

    const auto& a = m.at("agent");
    agent::from_json(a, c.run.sac);
    c.run.total_steps = get<int>(m, "agent", "total_steps");
    c.run.eval_episodes = get<int>(m, "agent", "eval_episodes");
    c.run.online.retrain_period = get<int>(m, "agent", "retrain_period");
    c.run.online.training = c.pretrain;
    c.run.online.training.epochs = get<int>(m, "agent", "online_epochs");
    c.run.online.training.max_batches_per_epoch = get<int>(m, "agent", "online_max_batches");

    for (const auto& name : m.at("modes")) c.modes.push_back(agent::mode_from_string(name.get<std::string>()));
    for (const auto& s : m.at("seeds")) c.seeds.push_back(s.get<std::uint64_t>());

    require(!c.seeds.empty(), "seeds must not be empty");
    require(!c.constant_delays.empty() || !c.random_delays.empty(), "the delay grid is empty");
    int needed = 0;
    for (int d : c.constant_delays) {
        require(d >= 0, "constant delays must be non-negative");
        needed = std::max(needed, d);
    }
    for (const auto& r : c.random_delays) {
        require(r.intrinsic >= 1 && r.max_extra >= 0, "random delays need d_I >= 1 and d_M >= 0");
        require(r.drop_prob >= 0.0 && r.drop_prob < 1.0, "mu must lie in [0, 1)");
        needed = std::max(needed, r.intrinsic + r.max_extra);
    }
    require(c.max_delay >= needed, "seq2seq.max_delay must cover the largest delay in the grid");
    require(c.dataset_random >= 0 && c.dataset_expert >= 0 && c.dataset_random + c.dataset_expert > 0,
            "dataset sizes must be non-negative and not both zero");
    require(c.expert_policy == "lqr" || c.expert_policy == "sac", "dataset.expert_policy must be auto, lqr or sac");
    require(c.expert_policy != "lqr" || env_name == "linear_system", "the lqr expert needs the linear_system env");
    require(c.expert_steps > 0 && c.expert_eval_episodes > 0, "expert settings must be positive");
    require(c.split_ratio > 0.0 && c.split_ratio < 1.0, "dataset.split must lie in (0, 1)");
    require(!c.hidden_sizes.empty(), "seq2seq.hidden must list at least one size");
    for (int k : c.hidden_sizes) c.seq2seq(k, probe->spec()).validate();
    require(c.pretrain.epochs >= 0 && c.pretrain.batch_size > 0, "seq2seq training settings are invalid");
    require(c.pretrain.learning_rate > 0.0 && c.pretrain.final_lr_fraction > 0.0 && c.pretrain.final_lr_fraction <= 1.0,
            "seq2seq.learning_rate must be positive and final_lr_fraction in (0, 1]");
    c.run.sac.validate();
    require(c.run.total_steps > 0 && c.run.eval_episodes > 0, "agent.total_steps and eval_episodes must be positive");

    c.materialized = m;
    nlohmann::json hashed = m;
    hashed.erase("seeds");
    hashed.erase("modes");
    hashed.erase("output_dir");
    c.hash = json_hash(hashed);
    return c;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& user, const std::filesystem::path& base_dir) {
    try {
        return parse_checked(user, base_dir);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

std::vector<Cell> ExperimentConfig::cells() const {
    std::vector<Cell> out;
    for (int d : constant_delays) {
        Cell c;
        c.delay_free = d == 0;
        c.name = "d" + std::to_string(d);
        c.delay.intrinsic_delay = std::max(d, 1);
        out.push_back(c);
    }
    for (const auto& r : random_delays) {
        Cell c;
        c.name = "dI" + std::to_string(r.intrinsic) + "_dM" + std::to_string(r.max_extra) + "_mu" + format_mu(r.drop_prob);
        c.delay.intrinsic_delay = r.intrinsic;
        c.delay.max_extra = r.max_extra;
        c.delay.drop_prob = r.drop_prob;
        out.push_back(c);
    }
    return out;
}

s2s::Seq2SeqConfig ExperimentConfig::seq2seq(int hidden, const envs::EnvSpec& spec) const {
    s2s::Seq2SeqConfig s;
    s.state_dim = spec.state_dim;
    s.action_dim = spec.action_dim;
    s.hidden = hidden;
    s.embed = embed;
    s.max_delay = max_delay;
    s.teacher_forcing = teacher_forcing;
    return s;
}

std::unique_ptr<envs::Environment> ExperimentConfig::make_env() const { return envs::make_environment(env); }

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string json_hash(const nlohmann::json& j) { return hex64(fnv1a(j.dump())); }

std::string file_hash(const std::filesystem::path& path) { return hex64(fnv1a(nn::read_file(path))); }

}  // namespace deer::exp
