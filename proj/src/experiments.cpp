#include "lae/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lae/plot.hpp"

namespace lae::harness {

namespace fs = std::filesystem;

namespace {

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) { add(header); }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) throw Error(ErrorKind::InvalidArgument, "csv row has the wrong width");
        add(cells);
    }
    const std::string& text() const { return text_; }

private:
    void add(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
        text_ += '\n';
    }
    std::size_t cols_;
    std::string text_;
};

std::string num(double v) { return format_number(v); }
std::string num(int v) { return std::to_string(v); }
std::string num(std::size_t v) { return std::to_string(v); }

void prepare(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create output directory " + dir.string());
}

fs::path put(RunReport& r, const fs::path& path, const std::string& content) {
    write_file(path, content);
    r.files.push_back(path);
    return path;
}

void put_plot(RunReport& r, const std::vector<Series>& s, const fs::path& stem, const PlotLabels& labels) {
    for (auto& p : emit_plot_data(s, stem, labels)) r.files.push_back(std::move(p));
}

// The output path is left out so that the same run written to two places
// produces identical files.
void write_header_files(RunReport& r, const ExperimentSpec& spec) {
    std::istringstream in(dump(spec));
    std::string line, text;
    while (std::getline(in, line)) {
        if (line.rfind("out = ", 0) != 0) text += line + "\n";
    }
    put(r, spec.out / "config.txt", text);
}

std::vector<double> iota_x(std::size_t n) {
    std::vector<double> x(n);
    std::iota(x.begin(), x.end(), 0.0);
    return x;
}

}  // namespace

env::EnvConfig make_env(const ExperimentSpec& spec, const game::GameInstance& game) {
    env::EnvConfig c;
    c.game = game;
    c.window_len = spec.env.window_len;
    c.reward_scale = spec.env.reward_scale;
    c.price_floor = spec.scenario.price_floor;
    c.price_ceiling = spec.scenario.price_max;
    c.episode_len = spec.train.steps_per_epoch;
    c.demand_noise_std = spec.env.demand_noise;
    c.seed = spec.scenario.seed;
    return c;
}

game::Equilibrium checked_equilibrium(const Market& market) {
    auto eq = game::solve_equilibrium(market.game);
    auto v = eq.violations(market.game);
    if (!v.empty()) {
        std::string msg = "equilibrium violates its invariants:";
        for (const auto& s : v) msg += " " + s + ";";
        throw Error(ErrorKind::ScenarioInfeasible, msg);
    }
    return eq;
}

RunReport run_equilibrium_snapshot(const ExperimentSpec& spec) {
    validate(spec);
    RunReport r;
    prepare(spec.out);
    const auto scenario = generate_scenario(spec.scenario);
    const auto market = build_market(scenario);
    const auto eq = checked_equilibrium(market);

    write_header_files(r, spec);
    std::ostringstream digest;
    digest << std::hex << scenario_digest(scenario);
    put(r, spec.out / "scenario.txt", "digest " + digest.str() + "\n" + serialize(scenario));

    Csv assoc({"user", "uav", "distance_m", "snr", "spectral_eff"});
    Csv alloc({"user", "uav", "gamma", "t_budget_s", "kappa_min_mhz", "kappa_star_mhz", "surplus_mhz", "follower_utility"});
    for (std::size_t i = 0; i < market.links.size(); ++i) {
        const auto& l = market.links[i];
        const auto& f = market.game.followers[i];
        assoc.row({num(i), num(l.uav), num(l.distance), num(l.snr), num(l.spectral_eff)});
        alloc.row({num(i), num(l.uav), num(l.stability.threshold.gamma), num(l.stability.budget.t_budget),
                   num(f.kappa_min), num(eq.demand[i]), num(eq.demand[i] - f.kappa_min), num(eq.follower_utility[i])});
    }
    put(r, spec.out / "association.csv", assoc.text());
    put(r, spec.out / "allocation.csv", alloc.text());

    Csv uavs({"uav", "users", "price", "case", "unconstrained_price", "price_lower", "price_upper", "theta_sum",
              "inv_eff_sum", "demand_mhz", "capacity_mhz", "capacity_bound", "utility", "reward"});
    for (const auto& u : eq.uavs) {
        const auto& a = u.aggregates;
        const double cap = market.game.leaders[static_cast<std::size_t>(u.uav)].capacity;
        const bool bound = u.decision.label != game::PriceCase::Idle && std::abs(u.total_demand - cap) <= 1e-9 * cap;
        uavs.row({num(u.uav), num(market.game.users_of(u.uav).size()), num(u.decision.price),
                  game::to_string(u.decision.label), num(u.decision.unconstrained), num(a.bounds.lower),
                  num(a.bounds.upper), num(a.theta_sum), num(a.inv_eff_sum), num(u.total_demand), num(cap),
                  bound ? "1" : "0", num(u.utility), num(spec.env.reward_scale * u.utility)});
    }
    put(r, spec.out / "uavs.csv", uavs.text());

    Series kmin{"kappa_min", iota_x(eq.demand.size()), {}, true};
    Series kstar{"kappa_star", iota_x(eq.demand.size()), eq.demand, true};
    for (const auto& f : market.game.followers) kmin.y.push_back(f.kappa_min);
    put_plot(r, {kmin, kstar}, spec.out / "allocation_plot", {"Bandwidth per user", "user", "MHz"});

    Series ux{"users", {}, {}, true};
    Series vx{"uavs", {}, {}, true};
    for (const auto& u : scenario.users) ux.x.push_back(u.position.x()), ux.y.push_back(u.position.y());
    for (const auto& n : scenario.uavs) vx.x.push_back(n.position.x()), vx.y.push_back(n.position.y());
    put_plot(r, {ux, vx}, spec.out / "topology", {"Topology", "x (m)", "y (m)"});

    for (const auto& u : eq.uavs) {
        std::ostringstream os;
        os << "uav " << u.uav << ": price " << u.decision.price << " (" << game::to_string(u.decision.label)
           << "), demand " << u.total_demand << " MHz, utility " << u.utility;
        r.lines.push_back(os.str());
    }
    return r;
}

double final_reward(const std::vector<ppo::EpochMetrics>& metrics, int window) {
    if (metrics.empty()) return 0.0;
    const auto n = std::min<std::size_t>(metrics.size(), static_cast<std::size_t>(std::max(1, window)));
    double s = 0.0;
    for (std::size_t i = metrics.size() - n; i < metrics.size(); ++i) s += metrics[i].test_reward;
    return s / static_cast<double>(n);
}

Comparison compare_methods(const env::EnvConfig& env_config, const ppo::TrainConfig& train, bool greedy_knows_channels) {
    Comparison c;
    {
        env::PricingEnv probe(env_config);
        const auto eq = probe.equilibrium_rewards();
        c.optimum = eq.empty() ? 0.0 : std::accumulate(eq.begin(), eq.end(), 0.0) / static_cast<double>(eq.size());
    }
    auto learn = [&](const char* name, bool prune) {
        MethodRun m;
        m.name = name;
        auto cfg = train;
        cfg.prune.enabled = prune;
        try {
            auto res = ppo::train(env_config, cfg);
            m.metrics = std::move(res.metrics);
            m.prune_events = std::move(res.prune_events);
        } catch (const ppo::TrainingDiverged& e) {
            m.diverged = true;
            m.error = e.what();
            m.metrics = e.stable_metrics();
        }
        c.methods.push_back(std::move(m));
    };
    learn("pruned_ppo", true);
    learn("dense_ppo", false);
    c.methods.push_back({"greedy",
                         ppo::run_baseline(env_config, ppo::Baseline::Greedy, train.epochs, train.seed, greedy_knows_channels),
                         {}, false, {}});
    c.methods.push_back({"random", ppo::run_baseline(env_config, ppo::Baseline::Random, train.epochs, train.seed), {}, false, {}});
    return c;
}

namespace {

void write_metrics(RunReport& r, const fs::path& path, const std::vector<MethodRun>& runs, bool timings) {
    Csv m({"method", "epoch", "mean_reward", "test_reward", "actor_loss", "critic_loss", "actor_density",
           "critic_density", "seconds"});
    for (const auto& run : runs) {
        for (const auto& e : run.metrics) {
            m.row({run.name, num(e.epoch), num(e.mean_reward), num(e.test_reward), num(e.actor_loss), num(e.critic_loss),
                   num(e.density), num(e.critic_density), timings ? num(e.seconds) : ""});
        }
    }
    put(r, path, m.text());
}

Series reward_series(const MethodRun& run) {
    Series s{run.name, {}, {}, false};
    for (const auto& e : run.metrics) {
        s.x.push_back(e.epoch);
        s.y.push_back(e.test_reward);
    }
    return s;
}

}  // namespace

RunReport run_training(const ExperimentSpec& spec) {
    validate(spec);
    RunReport r;
    prepare(spec.out);
    const auto scenario = generate_scenario(spec.scenario);
    const auto market = build_market(scenario);
    checked_equilibrium(market);
    const auto env_config = make_env(spec, market.game);
    const auto cmp = compare_methods(env_config, spec.train, spec.greedy_knows_channels);

    write_header_files(r, spec);
    write_metrics(r, spec.out / "metrics.csv", cmp.methods, spec.timings);

    std::vector<std::string> header{"epoch"};
    std::size_t epochs = 0;
    for (const auto& m : cmp.methods) {
        header.push_back(m.name);
        epochs = std::max(epochs, m.metrics.size());
    }
    Csv curves(header);
    for (std::size_t e = 0; e < epochs; ++e) {
        std::vector<std::string> row{num(e)};
        for (const auto& m : cmp.methods) row.push_back(e < m.metrics.size() ? num(m.metrics[e].test_reward) : "");
        curves.row(row);
    }
    put(r, spec.out / "rewards.csv", curves.text());
    std::vector<Series> series;
    for (const auto& m : cmp.methods) series.push_back(reward_series(m));
    put_plot(r, series, spec.out / "reward_curves", {"Test reward", "epoch", "reward per agent-step"});

    // Strategy trace and density curve of the pruned agent.
    const auto& pruned = cmp.methods.front();
    Csv trace({"epoch", "uav", "price", "demand_mhz"});
    Csv density({"epoch", "actor_density", "critic_density"});
    std::vector<Series> prices(env_config.game.leaders.size()), demands(env_config.game.leaders.size());
    for (std::size_t n = 0; n < prices.size(); ++n) {
        prices[n].name = "uav" + std::to_string(n);
        demands[n].name = "uav" + std::to_string(n);
    }
    for (const auto& e : pruned.metrics) {
        for (std::size_t n = 0; n < e.prices.size(); ++n) {
            trace.row({num(e.epoch), num(n), num(e.prices[n]), num(e.demands[n])});
            prices[n].x.push_back(e.epoch);
            prices[n].y.push_back(e.prices[n]);
            demands[n].x.push_back(e.epoch);
            demands[n].y.push_back(e.demands[n]);
        }
        density.row({num(e.epoch), num(e.density), num(e.critic_density)});
    }
    put(r, spec.out / "strategy.csv", trace.text());
    put(r, spec.out / "density.csv", density.text());
    put_plot(r, prices, spec.out / "prices", {"Posted price", "epoch", "price per MHz"});
    put_plot(r, demands, spec.out / "demands", {"Aggregate demand", "epoch", "MHz"});

    Csv events({"epoch", "target_density", "skipped_layers"});
    for (const auto& ev : pruned.prune_events) {
        std::string skipped;
        for (const auto& s : ev.skipped) skipped += (skipped.empty() ? "" : ";") + s;
        events.row({num(ev.epoch), num(ev.density), skipped});
    }
    put(r, spec.out / "prune_events.csv", events.text());

    Csv summary({"method", "final_reward", "optimum", "ratio", "status"});
    for (const auto& m : cmp.methods) {
        const double f = final_reward(m.metrics);
        summary.row({m.name, num(f), num(cmp.optimum), num(cmp.optimum > 0 ? f / cmp.optimum : 0.0),
                     m.diverged ? "diverged" : "ok"});
        std::ostringstream os;
        os << m.name << ": final reward " << f << " (" << (cmp.optimum > 0 ? 100.0 * f / cmp.optimum : 0.0)
           << "% of equilibrium)" << (m.diverged ? " DIVERGED: " + m.error : "");
        r.lines.push_back(os.str());
        r.diverged |= m.diverged;
    }
    put(r, spec.out / "summary.csv", summary.text());
    return r;
}

RunReport run_pruning_sweep(const ExperimentSpec& spec) {
    validate(spec);
    RunReport r;
    prepare(spec.out);
    const auto scenario = generate_scenario(spec.scenario);
    const auto market = build_market(scenario);
    checked_equilibrium(market);
    const auto env_config = make_env(spec, market.game);

    std::vector<MethodRun> runs;
    for (int t0 : spec.sweep.prune_starts) {
        auto cfg = spec.train;
        cfg.prune.enabled = true;
        cfg.prune.start_epoch = t0;
        MethodRun m;
        m.name = "t0_" + std::to_string(t0);
        try {
            auto res = ppo::train(env_config, cfg);
            m.metrics = std::move(res.metrics);
        } catch (const ppo::TrainingDiverged& e) {
            m.diverged = true;
            m.error = e.what();
            m.metrics = e.stable_metrics();
        }
        runs.push_back(std::move(m));
    }
    write_header_files(r, spec);
    write_metrics(r, spec.out / "metrics.csv", runs, spec.timings);
    std::vector<Series> series;
    Csv summary({"start_epoch", "final_reward", "final_density", "status"});
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& m = runs[k];
        series.push_back(reward_series(m));
        summary.row({num(spec.sweep.prune_starts[k]), num(final_reward(m.metrics)),
                     m.metrics.empty() ? "" : num(m.metrics.back().density), m.diverged ? "diverged" : "ok"});
        r.lines.push_back(m.name + ": final reward " + format_number(final_reward(m.metrics)) +
                          (m.diverged ? " DIVERGED: " + m.error : ""));
        r.diverged |= m.diverged;
    }
    put(r, spec.out / "summary.csv", summary.text());
    put_plot(r, series, spec.out / "reward_curves", {"Test reward by pruning start", "epoch", "reward per agent-step"});
    return r;
}

std::vector<SweepPoint> scaling_sweep(const ExperimentSpec& spec, bool vary_users) {
    validate(spec);
    std::vector<SweepPoint> out;
    for (int value : vary_users ? spec.sweep.users : spec.sweep.uavs) {
        SweepPoint p;
        p.value = value;
        std::vector<double> rewards;
        for (int k = 0; k < spec.sweep.seeds; ++k) {
            auto sc = spec.scenario;
            sc.users = vary_users ? value : spec.sweep.fixed_users;
            sc.uavs = vary_users ? spec.sweep.fixed_uavs : value;
            sc.seed = spec.scenario.seed + static_cast<std::uint64_t>(k);
            const auto market = build_market(generate_scenario(sc));
            try {
                const auto eq = checked_equilibrium(market);
                double total = 0.0;
                for (const auto& u : eq.uavs) total += spec.env.reward_scale * u.utility;
                rewards.push_back(total / static_cast<double>(eq.uavs.size()));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::ScenarioInfeasible) throw;
            }
            if (spec.sweep.learned && k == 0) {
                auto s2 = spec;
                s2.scenario = sc;
                auto cfg = spec.train;
                cfg.prune.enabled = false;
                try {
                    const auto env_config = make_env(s2, market.game);
                    const auto res = ppo::train(env_config, cfg);
                    p.learned_reward = final_reward(res.metrics);
                } catch (const ppo::TrainingDiverged&) {
                    p.learned_reward.reset();
                }
            }
        }
        p.feasible = static_cast<int>(rewards.size());
        if (!rewards.empty()) {
            const double n = static_cast<double>(rewards.size());
            p.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
            double var = 0.0;
            for (double x : rewards) var += (x - p.mean_reward) * (x - p.mean_reward);
            p.std_reward = std::sqrt(var / n);
            p.min_reward = *std::min_element(rewards.begin(), rewards.end());
            p.max_reward = *std::max_element(rewards.begin(), rewards.end());
        }
        out.push_back(p);
    }
    return out;
}

RunReport run_scaling_sweep(const ExperimentSpec& spec) {
    const bool users = spec.kind == ExperimentKind::UserSweep;
    RunReport r;
    prepare(spec.out);
    const auto points = scaling_sweep(spec, users);
    write_header_files(r, spec);
    Csv csv({users ? "users" : "uavs", "feasible_seeds", "mean_reward", "std_reward", "min_reward", "max_reward",
             "learned_reward"});
    Series s{"equilibrium", {}, {}, false};
    Series l{"learned", {}, {}, false};
    for (const auto& p : points) {
        csv.row({num(p.value), num(p.feasible), num(p.mean_reward), num(p.std_reward), num(p.min_reward),
                 num(p.max_reward), p.learned_reward ? num(*p.learned_reward) : ""});
        s.x.push_back(p.value);
        s.y.push_back(p.mean_reward);
        if (p.learned_reward) {
            l.x.push_back(p.value);
            l.y.push_back(*p.learned_reward);
        }
        r.lines.push_back(std::string(users ? "users " : "uavs ") + std::to_string(p.value) + ": mean reward per UAV " +
                          format_number(p.mean_reward) + " over " + std::to_string(p.feasible) + " seeds");
    }
    put(r, spec.out / "sweep.csv", csv.text());
    std::vector<Series> series{s};
    if (!l.x.empty()) series.push_back(l);
    put_plot(r, series, spec.out / "sweep", {"Reward per UAV", users ? "users" : "UAVs", "reward"});
    return r;
}

RunReport run_experiment(const ExperimentSpec& spec) {
    switch (spec.kind) {
        case ExperimentKind::EquilibriumSnapshot: return run_equilibrium_snapshot(spec);
        case ExperimentKind::TrainingRun: return run_training(spec);
        case ExperimentKind::UserSweep:
        case ExperimentKind::UavSweep: return run_scaling_sweep(spec);
        case ExperimentKind::PruningEpochSweep: return run_pruning_sweep(spec);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown experiment kind");
}

}  // namespace lae::harness
