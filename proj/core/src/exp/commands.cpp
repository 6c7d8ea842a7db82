#include "deer/exp/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "deer/agent/runners.hpp"
#include "deer/data/dataset_io.hpp"
#include "deer/data/samples.hpp"
#include "deer/envs/expert.hpp"
#include "deer/envs/linear_system.hpp"
#include "deer/nn/binary_io.hpp"

namespace deer::exp {

namespace fs = std::filesystem;
using nlohmann::json;
using nn::derive_seed;

namespace {

constexpr std::uint64_t kRandomStream = 1;
constexpr std::uint64_t kExpertStream = 2;
constexpr std::uint64_t kExpertEvalStream = 3;
constexpr std::uint64_t kSplitStream = 4;
constexpr std::uint64_t kPolicyEvalStream = 0xe7a1;

std::ostream& log_to(const CommandOptions& opt) {
    static std::ostream null_stream(nullptr);
    return opt.log ? *opt.log : null_stream;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("cannot read " + path.string());
    return json::parse(in);
}

void write_json(const fs::path& path, const json& j) { nn::write_file(path, j.dump(2) + "\n"); }

std::string prerequisite(const CommandOptions& opt, const std::string& command) {
    return "run `deer " + command + " --config " + opt.config_path + "` first";
}

void check_hash(const std::string& found, const ExperimentConfig& cfg, const fs::path& path,
                const CommandOptions& opt, const std::string& command) {
    if (found != cfg.hash)
        throw ArtifactError(path.string() + " was produced by config " + found + " but the current config is " +
                            cfg.hash + "; " + prerequisite(opt, command + " --force"));
}

/// Loads an artifact record and verifies its hash; false when absent.
bool fresh_record(const fs::path& path, const ExperimentConfig& cfg) {
    if (!fs::exists(path)) return false;
    return read_json(path).value("config_hash", "") == cfg.hash;
}

bool uses_encoder(agent::Mode m) { return m != agent::Mode::sacas; }

struct RunSpec {
    Cell cell;
    std::string name;
    std::string mode;  // "sac" for delay-free cells
    agent::Mode agent_mode = agent::Mode::deer;
    int hidden = 0;
};

std::vector<RunSpec> run_specs(const ExperimentConfig& cfg, const std::vector<agent::Mode>& modes) {
    std::vector<RunSpec> out;
    for (const auto& cell : cfg.cells()) {
        if (cell.delay_free) {
            out.push_back({cell, "sac", "sac", agent::Mode::deer, 0});
            continue;
        }
        for (auto m : modes) {
            if (!uses_encoder(m)) {
                out.push_back({cell, run_name(cell, m, 0), agent::to_string(m), m, 0});
                continue;
            }
            for (int k : cfg.hidden_sizes) out.push_back({cell, run_name(cell, m, k), agent::to_string(m), m, k});
        }
    }
    return out;
}

std::vector<double> rollout_expert(const envs::Environment& env, const envs::ExpertPolicy& expert, int episodes,
                                   std::uint64_t seed) {
    std::vector<double> returns;
    auto e = env.clone();
    for (int i = 0; i < episodes; ++i) {
        e->reset(derive_seed(seed, static_cast<std::uint64_t>(i)));
        double ret = 0.0;
        while (!e->done()) ret += e->step(expert.act(e->state())).reward;
        returns.push_back(ret);
    }
    return returns;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

s2s::Seq2SeqModel load_encoder(const ExperimentConfig& cfg, const Layout& layout, int hidden,
                               const CommandOptions& opt) {
    const auto path = layout.encoder(hidden);
    if (!fs::exists(path))
        throw ArtifactError("missing encoder checkpoint " + path.string() + "; " + prerequisite(opt, "pretrain"));
    const auto ckpt = nn::Checkpoint::load(path);
    check_hash(ckpt.meta.value("config_hash", ""), cfg, path, opt, "pretrain");
    return s2s::Seq2SeqModel::from_checkpoint(ckpt);
}

std::string fixed(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

}  // namespace

fs::path Layout::encoder(int hidden) const { return root / ("encoder_k" + std::to_string(hidden) + ".ckpt"); }

fs::path Layout::pretrain_curve(int hidden) const {
    return root / ("pretrain_k" + std::to_string(hidden) + ".jsonl");
}

fs::path Layout::run_stem(const std::string& cell, const std::string& run, std::uint64_t seed) const {
    return runs() / cell / run / ("seed" + std::to_string(seed));
}

std::string run_name(const Cell& cell, agent::Mode mode, int hidden) {
    if (cell.delay_free) return "sac";
    std::string name = agent::to_string(mode);
    if (uses_encoder(mode)) name += "_k" + std::to_string(hidden);
    return name;
}

std::pair<std::vector<data::SampleRef>, std::vector<data::SampleRef>> split_dataset(const ExperimentConfig& cfg,
                                                                                    const data::Dataset& ds) {
    return data::split(ds.samples, cfg.split_ratio, derive_seed(cfg.dataset_seed, kSplitStream));
}

void cmd_collect(const ExperimentConfig& cfg, const CommandOptions& opt) {
    const Layout layout{cfg.output_dir};
    auto& log = log_to(opt);
    if (!opt.force && fs::exists(layout.dataset()) && fresh_record(layout.collect_record(), cfg)) {
        log << "collect: " << layout.dataset().string() << " is up to date\n";
        return;
    }
    const auto env = cfg.make_env();
    const auto& spec = env->spec();

    std::unique_ptr<envs::ExpertPolicy> expert;
    if (cfg.expert_policy == "lqr") {
        const auto* lin = dynamic_cast<const envs::LinearSystemEnv*>(env.get());
        if (!lin) throw std::invalid_argument("the lqr expert needs the linear_system env");
        expert = std::make_unique<envs::LqrExpert>(lin->params());
    } else {
        std::optional<agent::SacAgent> trained;
        if (!opt.force && fs::exists(layout.expert())) {
            const auto ckpt = nn::Checkpoint::load(layout.expert());
            if (ckpt.meta.value("config_hash", "") == cfg.hash) trained = agent::SacAgent::from_checkpoint(ckpt);
        }
        if (!trained) {
            log << "collect: training the SAC expert for " << cfg.expert_steps << " steps\n";
            agent::RunConfig rc = cfg.run;
            rc.total_steps = cfg.expert_steps;
            rc.seed = cfg.dataset_seed;
            rc.eval_episodes = 1;
            auto result = agent::run_delay_free(*env, rc);
            trained = std::move(*result.agent);
            auto ckpt = trained->to_checkpoint();
            ckpt.meta["config_hash"] = cfg.hash;
            ckpt.save(layout.expert());
        }
        expert = std::make_unique<agent::SacExpert>(std::move(*trained));
    }

    log << "collect: " << cfg.dataset_random << " random + " << cfg.dataset_expert << " expert trajectories\n";
    auto store = data::collect(*env, data::CollectPolicy::random, cfg.dataset_random,
                               derive_seed(cfg.dataset_seed, kRandomStream));
    store.append(data::collect(*env, data::CollectPolicy::expert, cfg.dataset_expert,
                               derive_seed(cfg.dataset_seed, kExpertStream), expert.get()));
    store.validate(spec.state_dim, spec.action_dim);

    data::Dataset ds;
    ds.max_delay = cfg.max_delay;
    ds.delay_set = data::full_delay_set(cfg.max_delay);
    ds.samples = data::make_samples(store, ds.max_delay, ds.delay_set);
    ds.store = std::move(store);
    ds.meta = {{"config_hash", cfg.hash},
               {"env", cfg.env},
               {"random", cfg.dataset_random},
               {"expert", cfg.dataset_expert},
               {"expert_policy", cfg.expert_policy}};
    ds.save(layout.dataset());

    const auto expert_returns = rollout_expert(*env, *expert, cfg.expert_eval_episodes,
                                               derive_seed(cfg.dataset_seed, kExpertEvalStream));
    write_json(layout.collect_record(), {{"config_hash", cfg.hash},
                                         {"dataset", layout.dataset().filename().string()},
                                         {"dataset_hash", file_hash(layout.dataset())},
                                         {"expert_policy", cfg.expert_policy},
                                         {"expert_returns", expert_returns},
                                         {"expert_return", mean(expert_returns)},
                                         {"transitions", ds.store.num_transitions()},
                                         {"samples", ds.samples.size()}});
    log << "collect: wrote " << ds.samples.size() << " samples to " << layout.dataset().string() << "\n";
}

void cmd_pretrain(const ExperimentConfig& cfg, const CommandOptions& opt) {
    const Layout layout{cfg.output_dir};
    auto& log = log_to(opt);
    if (!fs::exists(layout.dataset()) || !fs::exists(layout.collect_record()))
        throw ArtifactError("missing dataset " + layout.dataset().string() + "; " + prerequisite(opt, "collect"));
    const json collected = read_json(layout.collect_record());
    check_hash(collected.value("config_hash", ""), cfg, layout.collect_record(), opt, "collect");

    std::optional<data::Dataset> ds;
    const auto env = cfg.make_env();
    for (int k : cfg.hidden_sizes) {
        const auto path = layout.encoder(k);
        if (!opt.force && fs::exists(path) && nn::Checkpoint::load(path).meta.value("config_hash", "") == cfg.hash) {
            log << "pretrain: " << path.string() << " is up to date\n";
            continue;
        }
        if (!ds) ds = data::Dataset::load(layout.dataset());
        check_hash(ds->meta.value("config_hash", ""), cfg, layout.dataset(), opt, "collect");
        auto [train, test] = split_dataset(cfg, *ds);

        auto model = s2s::Seq2SeqModel::create(cfg.seq2seq(k, env->spec()),
                                               derive_seed(cfg.pretrain.seed, static_cast<std::uint64_t>(k)));
        model.normalizer = s2s::Normalizer::fit(ds->store, env->spec());
        std::ostringstream curve;
        auto progress = [&](int epoch, double tr, double te) {
            curve << json{{"epoch", epoch}, {"train_loss", tr}, {"test_loss", te}, {"config_hash", cfg.hash}}.dump()
                  << '\n';
            log << "pretrain k=" << k << " epoch " << epoch << " train " << tr << " test " << te << "\n";
        };
        const auto result = s2s::pretrain(model, ds->store, train, test, cfg.pretrain, progress);
        const nn::Vector mse = s2s::raw_mse_per_dimension(model, ds->store, test);

        auto ckpt = model.to_checkpoint();
        ckpt.meta["config_hash"] = cfg.hash;
        ckpt.meta["dataset_hash"] = collected.value("dataset_hash", "");
        ckpt.meta["train_curve"] = result.train_curve;
        ckpt.meta["test_curve"] = result.test_curve;
        ckpt.meta["test_mse_per_dim"] = std::vector<double>(mse.begin(), mse.end());
        ckpt.save(path);
        nn::write_file(layout.pretrain_curve(k), curve.str());
    }
}

void cmd_train(const ExperimentConfig& cfg, const CommandOptions& opt) {
    const Layout layout{cfg.output_dir};
    auto& log = log_to(opt);
    const auto modes = opt.modes.value_or(cfg.modes);
    const auto seeds = opt.seeds.value_or(cfg.seeds);
    const auto env = cfg.make_env();
    std::map<int, s2s::Seq2SeqModel> encoders;
    std::map<int, std::string> encoder_hashes;

    for (const auto& run : run_specs(cfg, modes)) {
        const bool needs_ckpt =
            !run.cell.delay_free && (run.agent_mode == agent::Mode::deer || run.agent_mode == agent::Mode::dolps);
        if (needs_ckpt && !encoders.count(run.hidden)) {
            encoders.emplace(run.hidden, load_encoder(cfg, layout, run.hidden, opt));
            encoder_hashes[run.hidden] = file_hash(layout.encoder(run.hidden));
        }
        for (auto seed : seeds) {
            const auto stem = layout.run_stem(run.cell.name, run.name, seed);
            const fs::path record_path = stem.string() + ".record.json";
            if (!opt.force && fresh_record(record_path, cfg)) {
                log << "train: " << record_path.string() << " is up to date\n";
                continue;
            }
            log << "train: " << run.cell.name << "/" << run.name << " seed " << seed << "\n";
            agent::RunConfig rc = cfg.run;
            rc.seed = seed;
            rc.online.model = cfg.seq2seq(std::max(run.hidden, 1), env->spec());
            agent::RunResult result;
            if (run.cell.delay_free) {
                result = agent::run_delay_free(*env, rc);
            } else {
                switch (run.agent_mode) {
                    case agent::Mode::deer:
                        result = agent::run_deer(*env, run.cell.delay, encoders.at(run.hidden), rc);
                        break;
                    case agent::Mode::dolps:
                        result = agent::run_dolps(*env, run.cell.delay, encoders.at(run.hidden), rc);
                        break;
                    case agent::Mode::sacas:
                        result = agent::run_sacas(*env, run.cell.delay, rc);
                        break;
                    case agent::Mode::online_deer:
                        result = agent::run_online_deer(*env, run.cell.delay, rc);
                        break;
                }
            }

            std::ostringstream curve;
            agent::write_curve(curve, result.curve, {{"config_hash", cfg.hash}});
            const fs::path curve_path = stem.string() + ".jsonl";
            nn::write_file(curve_path, curve.str());

            auto policy = result.agent->to_checkpoint();
            policy.meta["config_hash"] = cfg.hash;
            const fs::path policy_path = stem.string() + ".policy.ckpt";
            policy.save(policy_path);

            json checkpoint_hash = nullptr;
            if (needs_ckpt) checkpoint_hash = encoder_hashes.at(run.hidden);
            if (result.encoder) {
                auto enc = result.encoder->to_checkpoint();
                enc.meta["config_hash"] = cfg.hash;
                const fs::path enc_path = stem.string() + ".encoder.ckpt";
                enc.save(enc_path);
                checkpoint_hash = file_hash(enc_path);
            }

            std::vector<double> eval_returns;
            for (const auto& p : result.curve)
                if (p.eval) eval_returns.push_back(p.return_true);
            write_json(record_path, {{"config_hash", cfg.hash},
                                     {"dataset_hash", fresh_record(layout.collect_record(), cfg)
                                                          ? read_json(layout.collect_record())["dataset_hash"]
                                                          : json(nullptr)},
                                     {"checkpoint_hash", checkpoint_hash},
                                     {"policy_hash", file_hash(policy_path)},
                                     {"curve_hash", file_hash(curve_path)},
                                     {"env", cfg.env.at("name")},
                                     {"cell", run.cell.name},
                                     {"run", run.name},
                                     {"mode", run.mode},
                                     {"hidden", run.hidden},
                                     {"seed", seed},
                                     {"env_steps", result.env_steps},
                                     {"episodes", result.episodes},
                                     {"encode_calls", result.encode_calls},
                                     {"input_dim", result.input_dim},
                                     {"eval_returns", eval_returns},
                                     {"final_return", result.final_return}});
            log << "train: final return " << result.final_return << "\n";
        }
    }
}

void cmd_eval(const ExperimentConfig& cfg, const CommandOptions& opt, int episodes) {
    const Layout layout{cfg.output_dir};
    auto& log = log_to(opt);
    const auto modes = opt.modes.value_or(cfg.modes);
    const auto seeds = opt.seeds.value_or(cfg.seeds);
    const int n = episodes > 0 ? episodes : cfg.run.eval_episodes;
    const auto env = cfg.make_env();
    std::map<int, s2s::Seq2SeqModel> encoders;

    for (const auto& run : run_specs(cfg, modes)) {
        for (auto seed : seeds) {
            const auto stem = layout.run_stem(run.cell.name, run.name, seed);
            const fs::path policy_path = stem.string() + ".policy.ckpt";
            if (!fs::exists(policy_path))
                throw ArtifactError("missing policy " + policy_path.string() + "; " + prerequisite(opt, "train"));
            const auto ckpt = nn::Checkpoint::load(policy_path);
            check_hash(ckpt.meta.value("config_hash", ""), cfg, policy_path, opt, "train");
            const auto policy = agent::SacAgent::from_checkpoint(ckpt);

            std::optional<s2s::Seq2SeqModel> own;
            const s2s::Seq2SeqModel* model = nullptr;
            if (!run.cell.delay_free && run.agent_mode == agent::Mode::online_deer) {
                own = s2s::Seq2SeqModel::from_checkpoint(nn::Checkpoint::load(stem.string() + ".encoder.ckpt"));
                model = &*own;
            } else if (!run.cell.delay_free && uses_encoder(run.agent_mode)) {
                if (!encoders.count(run.hidden)) encoders.emplace(run.hidden, load_encoder(cfg, layout, run.hidden, opt));
                model = &encoders.at(run.hidden);
            }
            std::optional<delay::DelayConfig> delay;
            if (!run.cell.delay_free) delay = run.cell.delay;
            const auto returns = agent::evaluate_policy(*env, delay, run.agent_mode, policy, model, n,
                                                        derive_seed(seed, kPolicyEvalStream));
            write_json(stem.string() + ".eval.json",
                       {{"config_hash", cfg.hash}, {"episodes", n}, {"returns", returns}, {"mean_return", mean(returns)}});
            log << "eval: " << run.cell.name << "/" << run.name << " seed " << seed << " mean " << mean(returns) << "\n";
        }
    }
}

double normalized_return(double ret, double min_return, double expert_return) {
    const double denom = expert_return - min_return;
    if (!(denom > 0.0) || !std::isfinite(denom))
        throw std::invalid_argument("normalized_return: expert return must exceed the minimum return");
    return (ret - min_return) / denom;
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double variance(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("variance of an empty set");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

const ReportRow* Report::find(const std::string& cell, const std::string& run) const {
    for (const auto& r : rows)
        if (r.cell == cell && r.run == run) return &r;
    return nullptr;
}

json Report::to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows)
        rows_j.push_back({{"cell", r.cell},
                          {"run", r.run},
                          {"mode", r.mode},
                          {"hidden", r.hidden},
                          {"returns", r.returns},
                          {"median", r.median},
                          {"variance", r.variance},
                          {"normalized_median", r.normalized_median},
                          {"normalized_variance", r.normalized_variance}});
    return {{"config_hash", config_hash},
            {"env", env},
            {"min_return", min_return},
            {"expert_return", expert_return},
            {"rows", rows_j}};
}

std::string Report::to_csv() const {
    std::ostringstream os;
    os << "env,cell,run,mode,k1,seeds,median,variance,normalized_median,normalized_variance\n";
    for (const auto& r : rows)
        os << env << ',' << r.cell << ',' << r.run << ',' << r.mode << ',' << r.hidden << ',' << r.returns.size() << ','
           << fixed(r.median) << ',' << fixed(r.variance) << ',' << fixed(r.normalized_median) << ','
           << fixed(r.normalized_variance) << '\n';
    return os.str();
}

Report cmd_report(const ExperimentConfig& cfg, const CommandOptions& opt) {
    const Layout layout{cfg.output_dir};
    const auto modes = opt.modes.value_or(cfg.modes);
    const auto seeds = opt.seeds.value_or(cfg.seeds);

    if (!fs::exists(layout.collect_record()))
        throw ArtifactError("missing " + layout.collect_record().string() + "; " + prerequisite(opt, "collect"));
    const json collected = read_json(layout.collect_record());
    check_hash(collected.value("config_hash", ""), cfg, layout.collect_record(), opt, "collect");

    if (fs::exists(layout.runs())) {
        for (const auto& entry : fs::recursive_directory_iterator(layout.runs())) {
            const auto name = entry.path().filename().string();
            if (!entry.is_regular_file() || !name.ends_with(".record.json")) continue;
            const auto found = read_json(entry.path()).value("config_hash", "");
            if (found != cfg.hash)
                throw ArtifactError("refusing to mix configs: " + entry.path().string() + " has config hash " + found +
                                    ", expected " + cfg.hash);
        }
    }

    Report report;
    report.config_hash = cfg.hash;
    report.env = cfg.env.at("name").get<std::string>();
    report.expert_return = collected.at("expert_return").get<double>();
    report.min_return = std::numeric_limits<double>::infinity();

    for (const auto& run : run_specs(cfg, modes)) {
        ReportRow row;
        row.cell = run.cell.name;
        row.run = run.name;
        row.mode = run.mode;
        row.hidden = run.hidden;
        for (auto seed : seeds) {
            const auto stem = layout.run_stem(run.cell.name, run.name, seed);
            const fs::path record_path = stem.string() + ".record.json";
            if (!fs::exists(record_path))
                throw ArtifactError("missing run record " + record_path.string() + "; " + prerequisite(opt, "train"));
            const json rec = read_json(record_path);
            row.returns.push_back(rec.at("final_return").get<double>());
            std::ifstream curve(stem.string() + ".jsonl");
            if (!curve) throw ArtifactError("missing curve for " + record_path.string());
            for (std::string line; std::getline(curve, line);) {
                if (line.empty()) continue;
                report.min_return = std::min(report.min_return, json::parse(line).at("episode_return_true").get<double>());
            }
            report.min_return = std::min(report.min_return, row.returns.back());
        }
        report.rows.push_back(std::move(row));
    }

    for (auto& row : report.rows) {
        std::vector<double> normalized;
        for (double r : row.returns) normalized.push_back(normalized_return(r, report.min_return, report.expert_return));
        row.median = median(row.returns);
        row.variance = variance(row.returns);
        row.normalized_median = median(normalized);
        row.normalized_variance = variance(normalized);
    }
    nn::write_file(layout.report_csv(), report.to_csv());
    write_json(layout.report_json(), report.to_json());
    return report;
}

}  // namespace deer::exp
