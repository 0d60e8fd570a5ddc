#pragma once

// Seeded world generation and its reduction to a pricing game.

#include <cstdint>
#include <string>
#include <vector>

#include "lae/config.hpp"
#include "lae/control.hpp"
#include "lae/game.hpp"
#include "lae/latency.hpp"
#include "lae/stability.hpp"

namespace lae::harness {

struct Scenario {
    ScenarioConfig config;
    latency::ChannelParams channel;
    std::vector<latency::UserDevice> users;
    std::vector<latency::UavNode> uavs;
};

/// Users uniform over the area; UAVs hover above k-means centres of the users
/// (k-means++ seeding, Lloyd iterations); per-entity parameters uniform over
/// their configured ranges. Deterministic in config.seed.
Scenario generate_scenario(const ScenarioConfig& config);

/// FNV-1a over the canonical serialisation.
std::uint64_t scenario_digest(const Scenario& s);
std::string serialize(const Scenario& s);

struct UserLink {
    int uav = 0;
    double distance = 0;
    double snr = 0;
    double spectral_eff = 0;
    stability::PipelineResult stability;
};

struct Market {
    game::GameInstance game;
    std::vector<UserLink> links;
};

/// Association by SNR, then the stability pipeline for every user evaluated
/// at its initial offset from the serving UAV. Bandwidths are in MHz.
Market build_market(const Scenario& s);

}  // namespace lae::harness
