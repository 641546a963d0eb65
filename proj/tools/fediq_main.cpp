// fediq: command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 broken internal invariant.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fediq/fileio.hpp"
#include "fediq/harness.hpp"

namespace {

struct CliArgs {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string manifest_path;  // rerun only
};

fediq::AppConfig make_config(const CliArgs& args) {
    if (args.config_file.empty()) return fediq::load_config(nullptr, args.overrides);
    const std::string text = fediq::read_file_text(fediq::harness::resolve_path(args.config_file));
    return fediq::load_config(&text, args.overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fediq: federated self-supervised representation learning on synthetic I/Q "
                 "streams, plus numerical verification of its convergence and separability "
                 "guarantees"};
    app.require_subcommand(1);

    CliArgs args;
    const char* kConfigHelp = "INI config file (sections [run], [signal], [partition], "
                              "[encoder], [ssl], [federate], [train], [classify], [evaluate], "
                              "[theory], [ingest])";
    const char* kSetHelp = "override one key, e.g. --set federate.rounds=3 (repeatable; "
                           "beats the config file)";

    const struct {
        const char* name;
        const char* help;
    } kCommands[] = {
        {"generate", "draw per-client IQDS datasets (unlabeled/labeled/test pools)"},
        {"train", "federated self-supervised training over the generated pools"},
        {"evaluate", "fit per-client SVMs on frozen features and score the test pools"},
        {"sweep", "accuracy versus test SNR over an integer grid"},
        {"theory", "Monte Carlo verification of the variance/regret/separability bounds"},
        {"resources", "analytic parameter count and forward FLOPs"},
        {"ingest", "convert an external I/Q recording into the IQDS container"},
    };
    for (const auto& c : kCommands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", args.config_file, kConfigHelp);
        sub->add_option("--set", args.overrides, kSetHelp);
    }
    CLI::App* rerun = app.add_subcommand("rerun", "re-execute the command recorded in a manifest");
    rerun->add_option("manifest", args.manifest_path, "path to a manifest_<command>.json")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const std::string command = app.get_subcommands().front()->get_name();
        if (command == "rerun") {
            fediq::harness::cmd_rerun(fediq::harness::resolve_path(args.manifest_path));
        } else {
            fediq::harness::run_command(command, make_config(args));
        }
        return 0;
    } catch (const fediq::config_error& e) {
        std::fprintf(stderr, "fediq: configuration error: %s\n", e.what());
        return 2;
    } catch (const fediq::data_error& e) {
        std::fprintf(stderr, "fediq: data error: %s\n", e.what());
        return 3;
    } catch (const fediq::internal_error& e) {
        std::fprintf(stderr, "fediq: internal error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fediq: internal error: %s\n", e.what());
        return 4;
    }
}
