#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "deer/exp/commands.hpp"
#include "deer/exp/config.hpp"

namespace {

struct Args {
    std::string config;
    std::string output;
    std::vector<std::string> modes;
    std::vector<std::uint64_t> seeds;
    bool force = false;
    bool quiet = false;
    int episodes = 0;
};

void add_common(CLI::App* sub, Args& args, bool with_mode) {
    sub->add_option("-c,--config", args.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--output", args.output, "override the config's output_dir");
    sub->add_option("--seeds", args.seeds, "seeds to run (default: the config's list)")->delimiter(',');
    sub->add_flag("-f,--force", args.force, "recompute artifacts that already exist");
    sub->add_flag("-q,--quiet", args.quiet, "suppress progress output");
    if (with_mode)
        sub->add_option("-m,--mode", args.modes, "deer, sacas, dolps or online-deer (default: the config's list)")
            ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delay-resilient RL experiments: collect, pretrain, train, eval, report"};
    app.require_subcommand(1);
    Args args;

    auto* collect = app.add_subcommand("collect", "roll out random and expert trajectories into a dataset");
    auto* pretrain = app.add_subcommand("pretrain", "fit the encoder-decoder on the dataset");
    auto* train = app.add_subcommand("train", "train policies over the delay grid");
    auto* eval = app.add_subcommand("eval", "re-evaluate trained policies");
    auto* report = app.add_subcommand("report", "aggregate run records into report.csv / report.json");
    auto* config = app.add_subcommand("config", "print the default config with every field filled in");
    add_common(collect, args, false);
    add_common(pretrain, args, false);
    add_common(train, args, true);
    add_common(eval, args, true);
    add_common(report, args, true);
    eval->add_option("-n,--episodes", args.episodes, "evaluation episodes (default: agent.eval_episodes)");

    CLI11_PARSE(app, argc, argv);

    if (config->parsed()) {
        std::cout << deer::exp::default_config().dump(2) << '\n';
        return EXIT_SUCCESS;
    }

    try {
        auto cfg = deer::exp::load_config(args.config);
        if (!args.output.empty()) cfg.output_dir = args.output;

        deer::exp::CommandOptions opt;
        opt.force = args.force;
        opt.log = args.quiet ? nullptr : &std::cerr;
        opt.config_path = args.config;
        if (!args.seeds.empty()) opt.seeds = args.seeds;
        if (!args.modes.empty()) {
            std::vector<deer::agent::Mode> modes;
            for (const auto& m : args.modes) modes.push_back(deer::agent::mode_from_string(m));
            opt.modes = modes;
        }

        if (collect->parsed()) deer::exp::cmd_collect(cfg, opt);
        if (pretrain->parsed()) deer::exp::cmd_pretrain(cfg, opt);
        if (train->parsed()) deer::exp::cmd_train(cfg, opt);
        if (eval->parsed()) deer::exp::cmd_eval(cfg, opt, args.episodes);
        if (report->parsed()) {
            const auto r = deer::exp::cmd_report(cfg, opt);
            std::cout << r.to_csv();
        }
    } catch (const std::exception& e) {
        std::cerr << "deer: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
