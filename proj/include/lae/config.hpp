#pragma once

// Experiment configuration: a plain-text key/value file with optional
// [section] headers, overridable from the environment.
//
//   [scenario]
//   uavs = 3
//   bandwidth_mhz = 15, 25   # ranges are "lo, hi"
//
// Every key belongs to exactly one section; "scenario.uavs = 3" at top level
// is equivalent. LAESIM_SCENARIO_UAVS=3 in the environment overrides the file.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lae/error.hpp"
#include "lae/ppo.hpp"

namespace lae::harness {

struct Range {
    double lo = 0;
    double hi = 0;
};

struct ScenarioConfig {
    int uavs = 3;
    int users = 5;
    double area_m = 1000;
    double altitude_m = 100;
    Range bandwidth_mhz{15, 25};
    Range tx_power_mw{100, 300};
    Range packet_kbit{40, 64};
    Range urgency{1, 5};
    Range unit_cost{0.1, 0.4};
    double sampling_period_s = 0.5;
    double cycles_per_bit = 1000;
    double cpu_ghz = 1;
    double h0_db = -40;
    double noise_dbm = -100;
    double path_loss_exp = 2;
    double decay_rate = 0.95;
    double time_constant_s = 0.005;
    double process_noise = 1e-4;
    double price_max = 5;
    double price_floor = 0.1;
    double t_pos_s = 0.1;
    double t_read_s = 0.002;
    double t_comp_s = 0.001;
    double t_base_s = 0.002;
    std::uint64_t seed = 0;
};

enum class ExperimentKind { EquilibriumSnapshot, TrainingRun, UserSweep, UavSweep, PruningEpochSweep };

const char* to_string(ExperimentKind k);

struct EnvSettings {
    int window_len = 5;
    double reward_scale = 1e-2;
    double demand_noise = 0.0;
};

struct SweepSettings {
    std::vector<int> users{5, 10, 15, 20};
    std::vector<int> uavs{3, 6, 9, 12};
    int fixed_uavs = 3;
    int fixed_users = 15;
    int seeds = 20;
    std::vector<int> prune_starts{50, 200, 300};
    bool learned = false;  // also train dense PPO at every sweep point
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::EquilibriumSnapshot;
    ScenarioConfig scenario;
    ppo::TrainConfig train;
    EnvSettings env;
    SweepSettings sweep;
    bool greedy_knows_channels = false;
    bool timings = false;  // wall-clock columns make output non-reproducible
    std::filesystem::path out = "out";
};

/// Parse problems: every entry is "source:line:col: message".
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Parses configuration text on top of the defaults. `source` names the
/// origin in error messages.
ExperimentSpec parse_config(const std::string& text, const std::string& source = "<config>");

ExperimentSpec load_config(const std::filesystem::path& path);

/// Applies PREFIX_SECTION_KEY variables from `environ`.
void apply_env_overrides(ExperimentSpec& spec, const std::string& prefix = "LAESIM_");

/// Lists every range violation; empty when the spec is valid.
std::vector<std::string> check(const ExperimentSpec& spec);

/// Throws ConfigError listing all violations.
void validate(const ExperimentSpec& spec);

/// Canonical text form; parse_config(dump(s)) reproduces s.
std::string dump(const ExperimentSpec& spec);

}  // namespace lae::harness
