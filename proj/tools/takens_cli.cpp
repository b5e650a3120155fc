// takens: delay-embedding rank certification, transfer-of-volume bounds, and
// Monte Carlo injectivity/immersivity experiments.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "takens/commands.hpp"
#include "takens/config.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file (key = value lines)");
    cmd->add_option("--seed", opts.seed, "master seed override");
    cmd->add_option("--out", opts.out_dir, "output directory override");
    cmd->add_option("--threads", opts.threads, "worker threads (0 = hardware)");
}

takens::ExperimentConfig load_config(const CommonOptions& opts) {
    takens::ExperimentConfig cfg = opts.config_path.empty()
                                       ? takens::ExperimentConfig{}
                                       : takens::ExperimentConfig::from_file(opts.config_path);
    if (opts.seed) cfg.master_seed = *opts.seed;
    if (opts.out_dir) cfg.out_dir = *opts.out_dir;
    if (opts.threads) cfg.threads = *opts.threads;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delay-embedding prevalence toolkit"};
    app.require_subcommand(1);

    CommonOptions rank_opts, embed_opts, sweep_opts, bounds_opts, fp_opts;
    std::vector<int> d_list;

    CLI::App* rank = app.add_subcommand("rank-suite", "run all rank-lemma checks");
    add_common(rank, rank_opts);

    CLI::App* embed = app.add_subcommand(
        "embed-verify", "Monte Carlo injectivity/immersivity experiment");
    add_common(embed, embed_opts);

    CLI::App* sweep = app.add_subcommand(
        "sweep", "embed-verify across embedding dimensions with bound margins");
    add_common(sweep, sweep_opts);
    sweep->add_option("--d-list", d_list, "embedding dimensions (default 2d+1..4d+2)")
        ->delimiter(',');

    CLI::App* bounds = app.add_subcommand(
        "bounds", "assembled probability bounds with measured constants");
    add_common(bounds, bounds_opts);

    CLI::App* fixed = app.add_subcommand(
        "fixed-points", "fixed-point census, periodic scan, tracking slope");
    add_common(fixed, fp_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (rank->parsed()) return takens::cmd_rank_suite(load_config(rank_opts), std::cout);
        if (embed->parsed()) return takens::cmd_embed_verify(load_config(embed_opts), std::cout);
        if (sweep->parsed()) return takens::cmd_sweep(load_config(sweep_opts), d_list, std::cout);
        if (bounds->parsed()) return takens::cmd_bounds(load_config(bounds_opts), std::cout);
        if (fixed->parsed()) return takens::cmd_fixed_points(load_config(fp_opts), std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
