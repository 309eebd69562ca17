// Command-line front end: exact solving, self-organization and the clustering demo.

#include "modso/config.hpp"
#include "modso/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Configuration file (section.key = value lines)");
    cmd->add_option("--seed", args.seed, "Override run.seed");
    cmd->add_option("--out", args.out_dir, "Override run.output_dir");
    cmd->add_option("--set", args.overrides, "Extra section.key=value assignment (repeatable)");
}

modso::RunConfig load(const CommonArgs& args) {
    auto cfg = args.config_path.empty() ? modso::parse_config("") : modso::load_config(args.config_path);
    for (const auto& item : args.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw modso::ConfigError("--set expects key=value, got '" + item + "'");
        modso::set_config_value(cfg, item.substr(0, eq), item.substr(eq + 1));
    }
    if (args.seed) cfg.seed = *args.seed;
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    // re-run the range checks on the final values
    return modso::parse_config(modso::canonical_text(cfg), "<effective config>");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Modular self-organization of navigation MDPs"};
    app.set_version_flag("--version", std::string(modso::kToolVersion));
    app.require_subcommand(1);

    CommonArgs args;
    long task = 0;

    auto* solve = app.add_subcommand("solve", "Exact value iteration and evaluation of one task");
    solve->add_option("--task", task, "Task number, 1..6")->required();
    add_common(solve, args);

    auto* selforg = app.add_subcommand("selforg", "Self-organize the six tasks over the modules");
    add_common(selforg, args);

    auto* demo = app.add_subcommand("cluster-demo", "Batch and on-line dynamic cluster on 2-D blobs");
    add_common(demo, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? modso::kExitOk : modso::kExitUsage;
    }

    modso::RunConfig cfg;
    try {
        cfg = load(args);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return modso::kExitUsage;
    }

    if (solve->parsed()) return modso::cmd_solve(cfg, task, std::cout, std::cerr);
    if (selforg->parsed()) return modso::cmd_selforg(cfg, std::cout, std::cerr);
    return modso::cmd_cluster_demo(cfg, std::cout, std::cerr);
}
