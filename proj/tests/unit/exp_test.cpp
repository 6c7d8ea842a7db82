#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "deer/exp/commands.hpp"
#include "deer/exp/config.hpp"
#include "deer/nn/binary_io.hpp"

using namespace deer;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny_user_config(const fs::path& out) {
    return {{"env", {{"name", "linear_system"}, {"horizon", 20}}},
            {"output_dir", out.string()},
            {"delays", {{"constant", {0, 2}}, {"random", json::array()}}},
            {"dataset", {{"random", 20}, {"expert", 2}, {"expert_eval_episodes", 2}}},
            {"seq2seq", {{"hidden", {8}}, {"embed", 4}, {"max_delay", 2}, {"epochs", 1}, {"batch_size", 64}}},
            {"agent",
             {{"hidden", {8, 8}},
              {"batch_size", 16},
              {"total_steps", 40},
              {"training_threshold", 20},
              {"eval_episodes", 1},
              {"retrain_period", 20},
              {"online_epochs", 1}}},
            {"modes", {"deer", "sacas"}},
            {"seeds", {0, 1}}};
}

class Workspace : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("deer_exp_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    exp::ExperimentConfig config(json patch = json::object()) const {
        json user = tiny_user_config(dir / "out");
        user.merge_patch(patch);
        return exp::parse_config(user);
    }

    fs::path dir;
    exp::CommandOptions quiet{};
};

std::string slurp(const fs::path& p) { return nn::read_file(p); }

}  // namespace

TEST(NormalizedReturn, FormulaEndpointsAndMidpoint) {
    EXPECT_EQ(exp::normalized_return(200.0, -100.0, 200.0), 1.0);
    EXPECT_EQ(exp::normalized_return(-100.0, -100.0, 200.0), 0.0);
    EXPECT_EQ(exp::normalized_return(50.0, -100.0, 200.0), 0.5);
}

TEST(NormalizedReturn, DegenerateDenominatorThrows) {
    EXPECT_THROW(exp::normalized_return(0.0, 5.0, 5.0), std::invalid_argument);
    EXPECT_THROW(exp::normalized_return(0.0, 5.0, 1.0), std::invalid_argument);
}

TEST(Statistics, MedianAndPopulationVariance) {
    EXPECT_EQ(exp::median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(exp::median({4.0, 1.0, 3.0, 2.0}), 2.5);
    EXPECT_EQ(exp::variance({1.0, 2.0, 3.0, 4.0}), 1.25);
    EXPECT_EQ(exp::variance({7.0}), 0.0);
    EXPECT_THROW(exp::median({}), std::invalid_argument);
}

TEST(Config, DefaultsAreMaterialized) {
    const auto c = exp::parse_config({{"env", {{"name", "pendulum"}}}});
    const auto defaults = exp::default_config();
    for (const auto& [section, value] : defaults.items()) {
        ASSERT_TRUE(c.materialized.contains(section)) << section;
        if (value.is_object() && section != "env")
            for (const auto& [key, _] : value.items()) EXPECT_TRUE(c.materialized[section].contains(key)) << key;
    }
    EXPECT_TRUE(c.materialized["env"].contains("gravity") || c.materialized["env"].size() > 1);
    EXPECT_EQ(c.expert_policy, "sac");
    EXPECT_EQ(c.hidden_sizes, (std::vector<int>{256}));
    EXPECT_EQ(c.seeds.size(), 5u);
    EXPECT_EQ(c.cells().size(), 9u);
    EXPECT_EQ(exp::parse_config({{"env", {{"name", "linear_system"}}}}).expert_policy, "lqr");
}

TEST(Config, UnknownKeysAreRejected) {
    EXPECT_THROW(exp::parse_config({{"envv", {{"name", "pendulum"}}}}), std::invalid_argument);
    EXPECT_THROW(exp::parse_config({{"agent", {{"learning_rate", 1.0}}}}), std::invalid_argument);
    EXPECT_THROW(exp::parse_config({{"env", {{"name", "pendulum"}, {"gravity_typo", 1.0}}}}), std::invalid_argument);
}

TEST(Config, InconsistentSettingsAreRejected) {
    // D must cover every delay of the grid.
    EXPECT_THROW(exp::parse_config({{"seq2seq", {{"max_delay", 4}}}}), std::invalid_argument);
    EXPECT_THROW(exp::parse_config({{"dataset", {{"split", 1.0}}}}), std::invalid_argument);
    EXPECT_THROW(exp::parse_config({{"modes", {"ppo"}}}), std::invalid_argument);
    EXPECT_THROW(exp::parse_config({{"agent", {{"gamma", "high"}}}}), std::invalid_argument);
    EXPECT_THROW(exp::parse_config({{"env", {{"name", "cartpole"}}}}), std::invalid_argument);
}

TEST(Config, CellNames) {
    const auto c = exp::parse_config({{"delays", {{"constant", {0, 4}}, {"random", {{2, 4, 0.2}}}}}});
    const auto cells = c.cells();
    ASSERT_EQ(cells.size(), 3u);
    EXPECT_EQ(cells[0].name, "d0");
    EXPECT_TRUE(cells[0].delay_free);
    EXPECT_EQ(cells[1].name, "d4");
    EXPECT_EQ(cells[1].delay.intrinsic_delay, 4);
    EXPECT_EQ(cells[2].name, "dI2_dM4_mu0.2");
    EXPECT_EQ(cells[2].delay.max_delay(), 6);
    EXPECT_EQ(cells[2].delay.drop_prob, 0.2);
}

TEST(Config, HashIgnoresSeedsModesAndOutputButNotSettings) {
    const auto base = exp::parse_config(json::object());
    EXPECT_EQ(exp::parse_config(json::object()).hash, base.hash);
    EXPECT_EQ(exp::parse_config({{"seeds", {7}}, {"modes", {"deer"}}, {"output_dir", "/tmp/x"}}).hash, base.hash);
    EXPECT_NE(exp::parse_config({{"seq2seq", {{"epochs", 3}}}}).hash, base.hash);
    EXPECT_NE(exp::parse_config({{"env", {{"name", "linear_system"}, {"horizon", 50}}}}).hash, base.hash);
    EXPECT_EQ(base.hash.size(), 16u);
}

TEST(Config, FileLoadingResolvesRelativeOutput) {
    const auto dir = fs::temp_directory_path() / "deer_cfg_load";
    fs::create_directories(dir);
    std::ofstream(dir / "c.json") << "{\n  // comment\n  \"output_dir\": \"out\"\n}\n";
    const auto c = exp::load_config(dir / "c.json");
    EXPECT_EQ(c.output_dir, dir / "out");
    std::ofstream(dir / "bad.json") << "{ \"seeds\": [1, }";
    EXPECT_THROW(exp::load_config(dir / "bad.json"), std::invalid_argument);
    EXPECT_THROW(exp::load_config(dir / "missing.json"), std::runtime_error);
    fs::remove_all(dir);
}

TEST(Hashing, Fnv1aReferenceValues) {
    EXPECT_EQ(exp::fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(exp::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(exp::hex64(0xabcULL), "0000000000000abc");
}

TEST_F(Workspace, MissingPrerequisitesNameTheCommand) {
    const auto cfg = config();
    quiet.config_path = "exp.json";
    try {
        exp::cmd_pretrain(cfg, quiet);
        FAIL() << "pretrain without a dataset";
    } catch (const exp::ArtifactError& e) {
        EXPECT_NE(std::string(e.what()).find("deer collect --config exp.json"), std::string::npos) << e.what();
    }
    exp::cmd_collect(cfg, quiet);
    try {
        exp::cmd_train(cfg, quiet);
        FAIL() << "train without an encoder";
    } catch (const exp::ArtifactError& e) {
        EXPECT_NE(std::string(e.what()).find("deer pretrain"), std::string::npos) << e.what();
    }
    EXPECT_THROW(exp::cmd_report(cfg, quiet), exp::ArtifactError);
    EXPECT_THROW(exp::cmd_eval(cfg, quiet), exp::ArtifactError);
}

TEST_F(Workspace, SacasAndOnlineDeerNeedNoEncoder) {
    const auto cfg = config({{"modes", {"sacas", "online-deer"}}, {"seeds", {0}}});
    exp::cmd_collect(cfg, quiet);
    EXPECT_NO_THROW(exp::cmd_train(cfg, quiet));
}

TEST_F(Workspace, PipelineProducesADeterministicReport) {
    const auto cfg = config();
    exp::cmd_collect(cfg, quiet);
    exp::cmd_pretrain(cfg, quiet);
    exp::cmd_train(cfg, quiet);
    const auto report = exp::cmd_report(cfg, quiet);
    ASSERT_EQ(report.rows.size(), 3u);
    EXPECT_EQ(report.rows[0].cell, "d0");
    EXPECT_EQ(report.rows[0].run, "sac");
    EXPECT_EQ(report.rows[1].run, "deer_k8");
    EXPECT_EQ(report.rows[2].run, "sacas");
    for (const auto& r : report.rows) {
        ASSERT_EQ(r.returns.size(), 2u);
        EXPECT_EQ(r.median, exp::median(r.returns));
        EXPECT_EQ(r.variance, exp::variance(r.returns));
        EXPECT_GE(r.normalized_median, 0.0);
    }
    EXPECT_LT(report.min_return, report.expert_return);

    const exp::Layout layout{cfg.output_dir};
    const auto csv = slurp(layout.report_csv());
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "env,cell,run,mode,k1,seeds,median,variance,normalized_median,normalized_variance");
    const auto curve = layout.run_stem("d2", "deer_k8", 1).string() + ".jsonl";
    const auto before = slurp(curve);
    for (const auto& line : {before.substr(0, before.find('\n'))})
        EXPECT_EQ(json::parse(line).at("config_hash"), cfg.hash);

    // Rerunning skips fresh records; reporting again changes nothing.
    const auto stamp = fs::last_write_time(curve);
    exp::cmd_train(cfg, quiet);
    EXPECT_EQ(fs::last_write_time(curve), stamp);
    exp::cmd_report(cfg, quiet);
    EXPECT_EQ(slurp(layout.report_csv()), csv);

    // Forced retraining reproduces the same bytes.
    auto forced = quiet;
    forced.force = true;
    forced.seeds = std::vector<std::uint64_t>{1};
    forced.modes = std::vector<agent::Mode>{agent::Mode::deer};
    exp::cmd_train(cfg, forced);
    EXPECT_EQ(slurp(curve), before);

    exp::cmd_eval(cfg, quiet, 2);
    const auto eval = json::parse(slurp(layout.run_stem("d2", "sacas", 0).string() + ".eval.json"));
    EXPECT_EQ(eval.at("returns").size(), 2u);
}

TEST_F(Workspace, ReportRefusesMismatchedHashes) {
    const auto cfg = config({{"modes", {"sacas"}}, {"seeds", {0}}});
    exp::cmd_collect(cfg, quiet);
    exp::cmd_train(cfg, quiet);
    EXPECT_NO_THROW(exp::cmd_report(cfg, quiet));
    const exp::Layout layout{cfg.output_dir};
    const auto record = layout.run_stem("d2", "sacas", 0).string() + ".record.json";
    auto j = json::parse(slurp(record));
    j["config_hash"] = "0000000000000000";
    std::ofstream(record) << j.dump();
    EXPECT_THROW(exp::cmd_report(cfg, quiet), exp::ArtifactError);

    // A different config must not silently reuse the old dataset either.
    const auto other = config({{"dataset", {{"random", 21}}}, {"modes", {"sacas"}}, {"seeds", {0}}});
    EXPECT_THROW(exp::cmd_pretrain(other, quiet), exp::ArtifactError);
}

TEST_F(Workspace, DimensionSweepGivesOneRowPerK1) {
    const auto cfg = config({{"seq2seq", {{"hidden", {4, 6, 8}}}},
                             {"delays", {{"constant", {2}}}},
                             {"modes", {"deer"}},
                             {"seeds", {0}}});
    exp::cmd_collect(cfg, quiet);
    exp::cmd_pretrain(cfg, quiet);
    exp::cmd_train(cfg, quiet);
    const auto report = exp::cmd_report(cfg, quiet);
    ASSERT_EQ(report.rows.size(), 3u);
    EXPECT_EQ(report.rows[0].hidden, 4);
    EXPECT_EQ(report.rows[1].hidden, 6);
    EXPECT_EQ(report.rows[2].hidden, 8);
    EXPECT_NE(report.find("d2", "deer_k6"), nullptr);
}
