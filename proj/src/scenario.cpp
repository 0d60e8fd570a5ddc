#include "lae/scenario.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace lae::harness {

namespace {

constexpr int kLloydIterations = 50;

double draw(std::mt19937_64& rng, const Range& r) {
    if (r.lo == r.hi) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

// k-means++ seeding followed by Lloyd iterations on the horizontal user
// positions. Centres without members stay where they are.
std::vector<Eigen::Vector2d> spread(const std::vector<Eigen::Vector2d>& pts, int k, double area,
                                    std::mt19937_64& rng) {
    std::vector<Eigen::Vector2d> centres;
    std::uniform_real_distribution<double> coord(0.0, area);
    centres.push_back(pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng)]);
    while (static_cast<int>(centres.size()) < k) {
        std::vector<double> w(pts.size());
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centres) best = std::min(best, (pts[i] - c).squaredNorm());
            w[i] = best;
            total += best;
        }
        if (total > 0.0) {
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            centres.push_back(pts[pick(rng)]);
        } else {
            // More UAVs than distinct user sites.
            centres.emplace_back(coord(rng), coord(rng));
        }
    }
    std::vector<int> owner(pts.size(), -1);
    for (int it = 0; it < kLloydIterations; ++it) {
        bool moved = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            int best = 0;
            for (int c = 1; c < k; ++c) {
                if ((pts[i] - centres[static_cast<std::size_t>(c)]).squaredNorm() <
                    (pts[i] - centres[static_cast<std::size_t>(best)]).squaredNorm()) {
                    best = c;
                }
            }
            moved |= owner[i] != best;
            owner[i] = best;
        }
        if (!moved) break;
        std::vector<Eigen::Vector2d> sum(static_cast<std::size_t>(k), Eigen::Vector2d::Zero());
        std::vector<int> count(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            sum[static_cast<std::size_t>(owner[i])] += pts[i];
            ++count[static_cast<std::size_t>(owner[i])];
        }
        for (std::size_t c = 0; c < centres.size(); ++c) {
            if (count[c]) centres[c] = sum[c] / count[c];
        }
    }
    return centres;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& config) {
    Scenario s;
    s.config = config;
    s.channel.h0 = latency::db_to_linear(config.h0_db);
    s.channel.noise_power = latency::dbm_to_watts(config.noise_dbm);
    s.channel.path_loss_exp = config.path_loss_exp;

    // Separate streams so that changing one population leaves the other intact.
    std::mt19937_64 place(config.seed * 2 + 1);
    std::mt19937_64 params(config.seed * 2 + 2);
    std::uniform_real_distribution<double> coord(0.0, config.area_m);

    std::vector<Eigen::Vector2d> xy;
    for (int i = 0; i < config.users; ++i) {
        latency::UserDevice u;
        const double x = coord(place);
        const double y = coord(place);
        xy.emplace_back(x, y);
        u.position = {x, y, 0.0};
        u.tx_power = draw(params, config.tx_power_mw) * 1e-3;
        u.packet_bits = draw(params, config.packet_kbit) * 1e3;
        u.urgency = draw(params, config.urgency);
        u.t_pos = config.t_pos_s;
        u.t_read = config.t_read_s;
        u.t_comp = config.t_comp_s;
        s.users.push_back(u);
    }
    for (const auto& c : spread(xy, config.uavs, config.area_m, place)) {
        latency::UavNode n;
        n.position = {c.x(), c.y(), config.altitude_m};
        n.cpu_hz = config.cpu_ghz * 1e9;
        n.cycles_per_bit = config.cycles_per_bit;
        n.t_base = config.t_base_s;
        n.time_constant = config.time_constant_s;
        n.bandwidth_total = draw(params, config.bandwidth_mhz) * 1e6;
        n.unit_cost = draw(params, config.unit_cost);
        n.sampling_period = config.sampling_period_s;
        s.uavs.push_back(n);
    }
    return s;
}

std::string serialize(const Scenario& s) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    os << "channel " << s.channel.h0 << ' ' << s.channel.path_loss_exp << ' ' << s.channel.noise_power << '\n';
    for (const auto& u : s.users) {
        os << "user " << u.position.transpose() << ' ' << u.tx_power << ' ' << u.packet_bits << ' ' << u.t_pos << ' '
           << u.t_read << ' ' << u.t_comp << ' ' << u.urgency << '\n';
    }
    for (const auto& n : s.uavs) {
        os << "uav " << n.position.transpose() << ' ' << n.cpu_hz << ' ' << n.cycles_per_bit << ' ' << n.t_base << ' '
           << n.time_constant << ' ' << n.bandwidth_total << ' ' << n.unit_cost << ' ' << n.sampling_period << '\n';
    }
    return os.str();
}

std::uint64_t scenario_digest(const Scenario& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : serialize(s)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

Market build_market(const Scenario& s) {
    Market m;
    const auto assoc = game::associate(s.users, s.uavs, s.channel);
    for (const auto& n : s.uavs) m.game.leaders.push_back({n.unit_cost, n.bandwidth_total * 1e-6});

    const auto base = control::double_integrator(s.config.sampling_period_s, s.config.decay_rate, s.config.process_noise);
    for (std::size_t i = 0; i < s.users.size(); ++i) {
        const auto& u = s.users[i];
        const auto& n = s.uavs[static_cast<std::size_t>(assoc[i])];
        UserLink link;
        link.uav = assoc[i];
        link.distance = (u.position - n.position).norm();
        link.snr = latency::snr(u, n, s.channel);
        link.spectral_eff = std::log2(1.0 + link.snr);

        const double t_fixed = latency::fixed_latency(u, n);
        if (t_fixed < s.config.sampling_period_s) {
            const auto model = control::stabilize(base, t_fixed);
            const auto disc = control::discretize(model, t_fixed);
            control::AugmentedState state;
            state.x = Eigen::VectorXd::Zero(6);
            state.x.head<2>() = (u.position - n.position).head<2>();
            state.u_prev = Eigen::VectorXd::Zero(3);
            link.stability = stability::stability_pipeline(state, disc, model, u, n, s.channel);
        } else {
            link.stability.budget = stability::latency_budget(0.0, s.config.sampling_period_s, t_fixed);
            link.stability.kappa_min = std::numeric_limits<double>::infinity();
        }

        game::FollowerView f;
        f.urgency = u.urgency;
        f.spectral_eff = link.spectral_eff;
        f.kappa_min = link.stability.kappa_min * 1e-6;
        f.association = assoc[i];
        m.game.followers.push_back(f);
        m.links.push_back(std::move(link));
    }
    return m;
}

}  // namespace lae::harness
