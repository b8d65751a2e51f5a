#include "CLI11.hpp"

#include "pdqkd/config.hpp"
#include "pdqkd/numerics.hpp"
#include "pdqkd/runner.hpp"

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct CliArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_path;
    std::string format;
    std::uint64_t seed = 0;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("--config", args.config_path, "config file (key = value)");
    cmd->add_option("--set", args.sets, "override, key=value (repeatable)");
    cmd->add_option("--out", args.out_path, "output path (default stdout)");
    cmd->add_option("--format", args.format, "csv | jsonl");
    cmd->add_option("--seed", args.seed, "rng seed");
    cmd->add_option("--jobs", args.jobs, "worker threads");
}

pdqkd::RunConfig build_config(const CLI::App* cmd, const CliArgs& args) {
    pdqkd::RunConfig cfg;
    if (!args.config_path.empty())
        cfg = pdqkd::parse_config_file(args.config_path);
    for (const std::string& s : args.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw pdqkd::config_error("--set needs key=value, got '" + s + "'");
        pdqkd::apply_override(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (cmd->count("--out")) cfg.out = args.out_path;
    if (cmd->count("--format"))
        pdqkd::apply_override(cfg, "format", args.format);
    if (cmd->count("--seed")) cfg.seed = args.seed;
    if (cmd->count("--jobs")) cfg.jobs = args.jobs;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Secure key rates for passive decoy-state QKD with a "
                 "beam-split weak-coherent source, with worst-case intensity "
                 "fluctuation bounds and active decoy baselines"};
    app.require_subcommand(1);

    CliArgs sweep_args, compare_args, validate_args;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "rate vs distance or vs fluctuation half-width");
    add_common(sweep, sweep_args);
    CLI::App* compare = app.add_subcommand(
        "compare", "passive vs 2/3-intensity active fidelities and cutoffs");
    add_common(compare, compare_args);
    CLI::App* validate = app.add_subcommand(
        "validate", "consistency grid, MC agreement, soundness batteries");
    add_common(validate, validate_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    try {
        CLI::App* cmd;
        CliArgs* args;
        if (sweep->parsed()) {
            cmd = sweep;
            args = &sweep_args;
        } else if (compare->parsed()) {
            cmd = compare;
            args = &compare_args;
        } else {
            cmd = validate;
            args = &validate_args;
        }
        const pdqkd::RunConfig cfg = build_config(cmd, *args);

        std::ofstream file;
        if (!cfg.out.empty()) {
            file.open(cfg.out);
            if (!file)
                throw pdqkd::config_error("cannot open output file '" +
                                          cfg.out + "'");
        }
        std::ostream& out = cfg.out.empty() ? std::cout : file;

        if (cmd == sweep) return pdqkd::cmd_sweep(cfg, out, std::cerr);
        if (cmd == compare) return pdqkd::cmd_compare(cfg, out, std::cerr);
        return pdqkd::cmd_validate(cfg, out, std::cerr);
    } catch (const pdqkd::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const pdqkd::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
