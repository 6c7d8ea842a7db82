#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deer/data/dataset_io.hpp"
#include "deer/exp/config.hpp"

namespace deer::exp {

/// A prerequisite artifact is missing or was produced by another config.
class ArtifactError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CommandOptions {
    std::optional<std::vector<agent::Mode>> modes;
    std::optional<std::vector<std::uint64_t>> seeds;
    bool force = false;  // recompute artifacts that already exist
    std::ostream* log = nullptr;
    std::string config_path = "<config>";  // only used in diagnostics
};

/// Artifact locations inside the output directory.
struct Layout {
    std::filesystem::path root;

    std::filesystem::path dataset() const { return root / "dataset.bin"; }
    std::filesystem::path collect_record() const { return root / "collect.json"; }
    std::filesystem::path expert() const { return root / "expert.ckpt"; }
    std::filesystem::path encoder(int hidden) const;
    std::filesystem::path pretrain_curve(int hidden) const;
    std::filesystem::path runs() const { return root / "runs"; }
    /// runs/<cell>/<run name>/seed<seed>; append .jsonl, .json, .policy.ckpt, ...
    std::filesystem::path run_stem(const std::string& cell, const std::string& run, std::uint64_t seed) const;
    std::filesystem::path report_csv() const { return root / "report.csv"; }
    std::filesystem::path report_json() const { return root / "report.json"; }
};

/// Name of a run inside a cell: "sac" for delay-free cells, otherwise the
/// mode plus "_k<K1>" for modes that own an encoder.
std::string run_name(const Cell& cell, agent::Mode mode, int hidden);

/// The train/test split pretraining uses for this config.
std::pair<std::vector<data::SampleRef>, std::vector<data::SampleRef>> split_dataset(const ExperimentConfig& cfg,
                                                                                    const data::Dataset& ds);

void cmd_collect(const ExperimentConfig& cfg, const CommandOptions& opt = {});
void cmd_pretrain(const ExperimentConfig& cfg, const CommandOptions& opt = {});
void cmd_train(const ExperimentConfig& cfg, const CommandOptions& opt = {});
void cmd_eval(const ExperimentConfig& cfg, const CommandOptions& opt = {}, int episodes = 0);

struct ReportRow {
    std::string cell;
    std::string run;
    std::string mode;
    int hidden = 0;
    std::vector<double> returns;  // one final return per seed
    double median = 0.0;
    double variance = 0.0;
    double normalized_median = 0.0;
    double normalized_variance = 0.0;
};

struct Report {
    std::string config_hash;
    std::string env;
    double min_return = 0.0;
    double expert_return = 0.0;
    std::vector<ReportRow> rows;

    const ReportRow* find(const std::string& cell, const std::string& run) const;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// Aggregates stored run records; never re-runs training.
Report cmd_report(const ExperimentConfig& cfg, const CommandOptions& opt = {});

/// (ret - min_return) / (expert_return - min_return)
double normalized_return(double ret, double min_return, double expert_return);

double median(std::vector<double> v);
/// Population variance.
double variance(const std::vector<double>& v);

}  // namespace deer::exp
