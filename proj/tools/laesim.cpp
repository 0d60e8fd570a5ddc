// laesim: command-line front end for the experiment drivers.
//
//   laesim equilibrium --config market.cfg --seed 7 --out out/market
//   laesim train --out out/train
//   laesim validate-config --config my.cfg
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 infeasible
// scenario, 4 training diverged.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "lae/config.hpp"
#include "lae/experiments.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kInfeasible = 3, kDiverged = 4 };

int exit_code(lae::ErrorKind k) {
    switch (k) {
        case lae::ErrorKind::Config: return kConfig;
        case lae::ErrorKind::ScenarioInfeasible:
        case lae::ErrorKind::EmptyFeasibleRegion:
        case lae::ErrorKind::StabilityInfeasible:
        case lae::ErrorKind::InfeasibleAllocation:
        case lae::ErrorKind::InfeasibleLatency:
        case lae::ErrorKind::Unstabilizable:
        case lae::ErrorKind::NoLink:
        case lae::ErrorKind::CoincidentPosition: return kInfeasible;
        case lae::ErrorKind::TrainingDiverged: return kDiverged;
        default: return kFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UAV bandwidth-pricing simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    bool quiet = false;
    bool timings = false;

    struct Verb {
        const char* name;
        const char* help;
        std::optional<lae::harness::ExperimentKind> kind;
    };
    const Verb verbs[] = {
        {"equilibrium", "Solve the pricing game for one scenario and write its allocation",
         lae::harness::ExperimentKind::EquilibriumSnapshot},
        {"train", "Train pruned and dense PPO next to the greedy and random baselines",
         lae::harness::ExperimentKind::TrainingRun},
        {"sweep-users", "Equilibrium reward per UAV as the number of users grows", lae::harness::ExperimentKind::UserSweep},
        {"sweep-uavs", "Equilibrium reward per UAV as the number of UAVs grows", lae::harness::ExperimentKind::UavSweep},
        {"sweep-pruning", "Pruned PPO for each pruning start epoch", lae::harness::ExperimentKind::PruningEpochSweep},
        {"validate-config", "Check a configuration file and print the effective settings", std::nullopt},
    };
    for (const auto& v : verbs) {
        auto* sub = app.add_subcommand(v.name, v.help);
        sub->add_option("--config", config_path, "Configuration file (key = value)");
        sub->add_option("--seed", seed, "Scenario and training seed")->each([&](const std::string&) { seed_given = true; });
        sub->add_option("--out", out, "Output directory");
        sub->add_flag("--quiet", quiet, "Only report errors");
        sub->add_flag("--timings", timings, "Record wall-clock seconds in metrics.csv");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    const auto* chosen = app.get_subcommands().front();
    const Verb* verb = nullptr;
    for (const auto& v : verbs) {
        if (chosen->get_name() == v.name) verb = &v;
    }

    try {
        auto spec = config_path.empty() ? lae::harness::ExperimentSpec{} : lae::harness::load_config(config_path);
        lae::harness::apply_env_overrides(spec);
        if (seed_given) {
            spec.scenario.seed = seed;
            spec.train.seed = seed;
        }
        if (!out.empty()) spec.out = out;
        if (timings) spec.timings = true;
        if (verb->kind) spec.kind = *verb->kind;
        lae::harness::validate(spec);

        if (!verb->kind) {
            if (!quiet) std::cout << lae::harness::dump(spec);
            return kOk;
        }
        const auto report = lae::harness::run_experiment(spec);
        if (!quiet) {
            for (const auto& line : report.lines) std::cout << line << '\n';
            std::cout << "wrote " << report.files.size() << " files to " << spec.out.string() << '\n';
        }
        return report.diverged ? kDiverged : kOk;
    } catch (const lae::harness::ConfigError& e) {
        for (const auto& p : e.problems()) std::cerr << "config error: " << p << '\n';
        return kConfig;
    } catch (const lae::Error& e) {
        std::cerr << "error (" << lae::to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
