#include "lae/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

extern char** environ;

namespace lae::harness {

const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::EquilibriumSnapshot: return "equilibrium-snapshot";
        case ExperimentKind::TrainingRun: return "training-run";
        case ExperimentKind::UserSweep: return "user-sweep";
        case ExperimentKind::UavSweep: return "uav-sweep";
        case ExperimentKind::PruningEpochSweep: return "pruning-epoch-sweep";
    }
    return "?";
}

namespace {

std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(ErrorKind::Config, join(problems, "\n")), problems_(std::move(problems)) {}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(v);
    while (std::getline(is, cur, ',')) out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& s) {
    double v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end || s.empty()) throw std::invalid_argument("expected a number, got '" + s + "'");
    return v;
}

template <typename Int>
Int to_int(const std::string& s) {
    Int v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end || s.empty()) throw std::invalid_argument("expected an integer, got '" + s + "'");
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Field {
    std::string key;  // section.name
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

Field num(std::string key, double& ref) {
    return {std::move(key), [&ref](const std::string& s) { ref = to_double(s); }, [&ref] { return fmt(ref); }};
}

template <typename Int>
Field integer(std::string key, Int& ref) {
    return {std::move(key), [&ref](const std::string& s) { ref = to_int<Int>(s); },
            [&ref] { return std::to_string(ref); }};
}

Field flag(std::string key, bool& ref) {
    return {std::move(key), [&ref](const std::string& s) { ref = to_bool(s); },
            [&ref] { return std::string(ref ? "true" : "false"); }};
}

Field range(std::string key, Range& ref) {
    return {std::move(key),
            [&ref](const std::string& s) {
                const auto parts = split_list(s);
                if (parts.size() != 2) throw std::invalid_argument("expected 'lo, hi', got '" + s + "'");
                ref = {to_double(parts[0]), to_double(parts[1])};
            },
            [&ref] { return fmt(ref.lo) + ", " + fmt(ref.hi); }};
}

Field int_list(std::string key, std::vector<int>& ref) {
    return {std::move(key),
            [&ref](const std::string& s) {
                std::vector<int> v;
                for (const auto& p : split_list(s)) v.push_back(to_int<int>(p));
                ref = std::move(v);
            },
            [&ref] {
                std::string s;
                for (std::size_t i = 0; i < ref.size(); ++i) s += (i ? ", " : "") + std::to_string(ref[i]);
                return s;
            }};
}

template <typename E>
Field choice(std::string key, E& ref, std::vector<std::pair<std::string, E>> names) {
    return {std::move(key),
            [&ref, names](const std::string& s) {
                for (const auto& [n, v] : names) {
                    if (n == s) {
                        ref = v;
                        return;
                    }
                }
                std::string allowed;
                for (const auto& [n, v] : names) allowed += (allowed.empty() ? "" : ", ") + n;
                throw std::invalid_argument("expected one of {" + allowed + "}, got '" + s + "'");
            },
            [&ref, names] {
                for (const auto& [n, v] : names) {
                    if (v == ref) return n;
                }
                return std::string("?");
            }};
}

std::vector<Field> fields(ExperimentSpec& s) {
    auto& sc = s.scenario;
    auto& tr = s.train;
    auto& pr = s.train.prune;
    return {
        choice<ExperimentKind>("experiment.kind", s.kind,
                               {{"equilibrium-snapshot", ExperimentKind::EquilibriumSnapshot},
                                {"training-run", ExperimentKind::TrainingRun},
                                {"user-sweep", ExperimentKind::UserSweep},
                                {"uav-sweep", ExperimentKind::UavSweep},
                                {"pruning-epoch-sweep", ExperimentKind::PruningEpochSweep}}),
        {"experiment.out", [&s](const std::string& v) { s.out = v; }, [&s] { return s.out.string(); }},
        flag("experiment.greedy_knows_channels", s.greedy_knows_channels),
        flag("experiment.timings", s.timings),

        integer("scenario.uavs", sc.uavs),
        integer("scenario.users", sc.users),
        num("scenario.area_m", sc.area_m),
        num("scenario.altitude_m", sc.altitude_m),
        range("scenario.bandwidth_mhz", sc.bandwidth_mhz),
        range("scenario.tx_power_mw", sc.tx_power_mw),
        range("scenario.packet_kbit", sc.packet_kbit),
        range("scenario.urgency", sc.urgency),
        range("scenario.unit_cost", sc.unit_cost),
        num("scenario.sampling_period_s", sc.sampling_period_s),
        num("scenario.cycles_per_bit", sc.cycles_per_bit),
        num("scenario.cpu_ghz", sc.cpu_ghz),
        num("scenario.h0_db", sc.h0_db),
        num("scenario.noise_dbm", sc.noise_dbm),
        num("scenario.path_loss_exp", sc.path_loss_exp),
        num("scenario.decay_rate", sc.decay_rate),
        num("scenario.time_constant_s", sc.time_constant_s),
        num("scenario.process_noise", sc.process_noise),
        num("scenario.price_max", sc.price_max),
        num("scenario.price_floor", sc.price_floor),
        num("scenario.t_pos_s", sc.t_pos_s),
        num("scenario.t_read_s", sc.t_read_s),
        num("scenario.t_comp_s", sc.t_comp_s),
        num("scenario.t_base_s", sc.t_base_s),
        integer("scenario.seed", sc.seed),

        integer("env.window_len", s.env.window_len),
        num("env.reward_scale", s.env.reward_scale),
        num("env.demand_noise", s.env.demand_noise),

        integer("train.epochs", tr.epochs),
        integer("train.steps_per_epoch", tr.steps_per_epoch),
        num("train.actor_lr", tr.actor_lr),
        num("train.critic_lr", tr.critic_lr),
        num("train.gamma", tr.gamma),
        num("train.gae_lambda", tr.gae_lambda),
        num("train.clip", tr.clip),
        integer("train.minibatch", tr.minibatch),
        integer("train.update_epochs", tr.update_epochs),
        int_list("train.hidden", tr.hidden),
        choice<ppo::OptimizerKind>("train.optimizer", tr.optimizer,
                                   {{"sgd", ppo::OptimizerKind::Sgd}, {"adam", ppo::OptimizerKind::Adam}}),
        num("train.init_log_std", tr.init_log_std),
        num("train.max_grad_norm", tr.max_grad_norm),
        flag("train.shared_weights", tr.shared_weights),
        integer("train.seed", tr.seed),

        flag("prune.enabled", pr.enabled),
        num("prune.w_init", pr.w_init),
        num("prune.w_target", pr.w_target),
        integer("prune.start_epoch", pr.start_epoch),
        integer("prune.steps", pr.prune_steps),
        integer("prune.frequency", pr.frequency),
        choice<ppo::ThresholdMode>("prune.threshold", pr.threshold,
                                   {{"quantile", ppo::ThresholdMode::Quantile},
                                    {"mean-scaled", ppo::ThresholdMode::MeanScaled},
                                    {"raw", ppo::ThresholdMode::Raw}}),
        flag("prune.literal_schedule", pr.literal_schedule),

        int_list("sweep.users", s.sweep.users),
        int_list("sweep.uavs", s.sweep.uavs),
        integer("sweep.fixed_uavs", s.sweep.fixed_uavs),
        integer("sweep.fixed_users", s.sweep.fixed_users),
        integer("sweep.seeds", s.sweep.seeds),
        int_list("sweep.prune_starts", s.sweep.prune_starts),
        flag("sweep.learned", s.sweep.learned),
    };
}

Field* find(std::vector<Field>& fs, const std::string& key) {
    for (auto& f : fs) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

}  // namespace

ExperimentSpec parse_config(const std::string& text, const std::string& source) {
    ExperimentSpec spec;
    auto fs = fields(spec);
    std::vector<std::string> problems;
    auto report = [&](int line, std::size_t col, const std::string& msg) {
        problems.push_back(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
    };

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = raw.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const std::size_t col = first + 1;
        if (line[first] == '[') {
            const auto close = line.find(']', first);
            if (close == std::string::npos || !trim(line.substr(close + 1)).empty()) {
                report(line_no, col, "malformed section header");
                continue;
            }
            section = trim(line.substr(first + 1, close - first - 1));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            report(line_no, col, "expected 'key = value'");
            continue;
        }
        const std::string name = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::size_t value_col = line.find_first_not_of(" \t", eq + 1) == std::string::npos
                                          ? eq + 2
                                          : line.find_first_not_of(" \t", eq + 1) + 1;
        if (name.empty()) {
            report(line_no, col, "missing key");
            continue;
        }
        const std::string key = name.find('.') == std::string::npos && !section.empty() ? section + "." + name : name;
        Field* f = find(fs, key);
        if (!f) {
            report(line_no, col, "unknown key '" + key + "'");
            continue;
        }
        try {
            f->set(value);
        } catch (const std::invalid_argument& e) {
            report(line_no, value_col, key + ": " + e.what());
        }
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return spec;
}

ExperimentSpec load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({path.string() + ": cannot open configuration file"});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

void apply_env_overrides(ExperimentSpec& spec, const std::string& prefix) {
    auto fs = fields(spec);
    std::vector<std::string> problems;
    for (char** e = environ; e && *e; ++e) {
        const std::string entry = *e;
        if (entry.rfind(prefix, 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        const std::string var = entry.substr(0, eq);
        std::string key = var.substr(prefix.size());
        for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        const auto us = key.find('_');
        if (us != std::string::npos) key[us] = '.';
        Field* f = find(fs, key);
        if (!f) {
            problems.push_back(var + ": unknown key '" + key + "'");
            continue;
        }
        try {
            f->set(trim(entry.substr(eq + 1)));
        } catch (const std::invalid_argument& ex) {
            problems.push_back(var + ": " + ex.what());
        }
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::vector<std::string> check(const ExperimentSpec& spec) {
    std::vector<std::string> v;
    const auto& s = spec.scenario;
    auto need = [&](bool ok, const std::string& field, const std::string& rule) {
        if (!ok) v.push_back(field + ": " + rule);
    };
    auto finite = [](double x) { return std::isfinite(x); };
    auto range_ok = [&](const Range& r, const std::string& field, bool positive) {
        need(finite(r.lo) && finite(r.hi) && r.lo <= r.hi, field, "need finite lo <= hi");
        if (positive) need(r.lo > 0, field, "values must be positive");
    };
    need(s.uavs >= 1, "scenario.uavs", "must be >= 1");
    need(s.users >= 1, "scenario.users", "must be >= 1");
    need(s.area_m > 0 && finite(s.area_m), "scenario.area_m", "must be positive");
    need(s.altitude_m > 0 && finite(s.altitude_m), "scenario.altitude_m", "must be positive");
    range_ok(s.bandwidth_mhz, "scenario.bandwidth_mhz", true);
    range_ok(s.tx_power_mw, "scenario.tx_power_mw", true);
    range_ok(s.packet_kbit, "scenario.packet_kbit", true);
    range_ok(s.urgency, "scenario.urgency", true);
    range_ok(s.unit_cost, "scenario.unit_cost", false);
    need(s.unit_cost.lo >= 0, "scenario.unit_cost", "must be >= 0");
    need(s.sampling_period_s > 0 && finite(s.sampling_period_s), "scenario.sampling_period_s", "must be positive");
    need(s.cycles_per_bit >= 0 && finite(s.cycles_per_bit), "scenario.cycles_per_bit", "must be >= 0");
    need(s.cpu_ghz > 0 && finite(s.cpu_ghz), "scenario.cpu_ghz", "must be positive");
    need(finite(s.h0_db), "scenario.h0_db", "must be finite");
    need(finite(s.noise_dbm), "scenario.noise_dbm", "must be finite");
    need(s.path_loss_exp > 0 && finite(s.path_loss_exp), "scenario.path_loss_exp", "must be positive");
    need(s.decay_rate > 0 && s.decay_rate < 1, "scenario.decay_rate", "must lie in (0,1)");
    need(s.time_constant_s > 0 && finite(s.time_constant_s), "scenario.time_constant_s", "must be positive");
    need(s.process_noise >= 0 && finite(s.process_noise), "scenario.process_noise", "must be >= 0");
    need(s.price_max > 0 && finite(s.price_max), "scenario.price_max", "must be positive");
    need(s.price_floor >= 0 && s.price_floor < s.price_max, "scenario.price_floor", "need 0 <= price_floor < price_max");
    for (auto [name, val] : {std::pair{"scenario.t_pos_s", s.t_pos_s}, std::pair{"scenario.t_read_s", s.t_read_s},
                             std::pair{"scenario.t_comp_s", s.t_comp_s}, std::pair{"scenario.t_base_s", s.t_base_s}}) {
        need(val >= 0 && finite(val), name, "must be >= 0");
    }

    need(spec.env.window_len >= 1, "env.window_len", "must be >= 1");
    need(spec.env.reward_scale > 0, "env.reward_scale", "must be positive");
    need(spec.env.demand_noise >= 0, "env.demand_noise", "must be >= 0");

    const auto& t = spec.train;
    need(t.epochs >= 1, "train.epochs", "must be >= 1");
    need(t.steps_per_epoch >= 1, "train.steps_per_epoch", "must be >= 1");
    need(t.actor_lr > 0, "train.actor_lr", "must be positive");
    need(t.critic_lr > 0, "train.critic_lr", "must be positive");
    need(t.gamma > 0 && t.gamma <= 1, "train.gamma", "must lie in (0,1]");
    need(t.gae_lambda >= 0 && t.gae_lambda <= 1, "train.gae_lambda", "must lie in [0,1]");
    need(t.clip > 0 && t.clip < 1, "train.clip", "must lie in (0,1)");
    need(t.minibatch >= 1, "train.minibatch", "must be >= 1");
    need(t.update_epochs >= 1, "train.update_epochs", "must be >= 1");
    need(!t.hidden.empty(), "train.hidden", "needs at least one layer");
    for (int h : t.hidden) need(h >= 1, "train.hidden", "widths must be positive");
    need(t.max_grad_norm >= 0, "train.max_grad_norm", "must be >= 0");

    const auto& p = t.prune;
    need(p.w_init > 0 && p.w_init <= 1, "prune.w_init", "must lie in (0,1]");
    need(p.w_target > 0 && p.w_target <= p.w_init, "prune.w_target", "must lie in (0, w_init]");
    need(p.start_epoch >= 0, "prune.start_epoch", "must be >= 0");
    need(p.prune_steps >= 1, "prune.steps", "must be >= 1");
    need(p.frequency >= 1, "prune.frequency", "must be >= 1");

    const auto& sw = spec.sweep;
    need(!sw.users.empty(), "sweep.users", "must be nonempty");
    for (int u : sw.users) need(u >= 1, "sweep.users", "entries must be >= 1");
    need(!sw.uavs.empty(), "sweep.uavs", "must be nonempty");
    for (int u : sw.uavs) need(u >= 1, "sweep.uavs", "entries must be >= 1");
    need(sw.fixed_uavs >= 1, "sweep.fixed_uavs", "must be >= 1");
    need(sw.fixed_users >= 1, "sweep.fixed_users", "must be >= 1");
    need(sw.seeds >= 1, "sweep.seeds", "must be >= 1");
    need(!sw.prune_starts.empty(), "sweep.prune_starts", "must be nonempty");
    for (int e : sw.prune_starts) need(e >= 0, "sweep.prune_starts", "entries must be >= 0");
    need(!spec.out.empty(), "experiment.out", "must be nonempty");
    return v;
}

void validate(const ExperimentSpec& spec) {
    auto v = check(spec);
    if (!v.empty()) throw ConfigError(std::move(v));
}

std::string dump(const ExperimentSpec& spec) {
    ExperimentSpec copy = spec;
    auto fs = fields(copy);
    std::string out;
    std::string section;
    for (const auto& f : fs) {
        const auto dot = f.key.find('.');
        const std::string sec = f.key.substr(0, dot);
        if (sec != section) {
            out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
            section = sec;
        }
        out += f.key.substr(dot + 1) + " = " + f.get() + "\n";
    }
    return out;
}

}  // namespace lae::harness
