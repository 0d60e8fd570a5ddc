#pragma once

// Maps the Lyapunov descent requirement of a tracking loop onto a latency
// budget and the smallest bandwidth that meets it.

#include <random>

#include "lae/control.hpp"
#include "lae/latency.hpp"

namespace lae::stability {

struct StabilityBudget {
    double gamma = 0;
    double d_req = 0;     // Markov-bound ceiling on the mean loop latency
    double t_fixed = 0;
    double t_budget = 0;  // left over for communication
    bool feasible = true;
};

StabilityBudget latency_budget(double gamma, double sampling_period, double t_fixed);

/// Bandwidth (Hz) at which the packet's Shannon-rate airtime equals t_budget.
double min_bandwidth(double packet_bits, double t_budget, double snr);

struct PipelineResult {
    control::SuccessThreshold threshold;
    StabilityBudget budget;
    double kappa_min = 0;  // Hz; +inf when infeasible
};

PipelineResult stability_pipeline(const control::AugmentedState& state, const control::Discretization& disc,
                                  const control::SystemModel& model, const latency::UserDevice& user,
                                  const latency::UavNode& uav, const latency::ChannelParams& params);

/// Delivery model used to close the loop in simulation: the latency follows
/// the two-point law {0, e} that attains Markov's bound, so a packet with mean
/// latency E[T] arrives in time with probability exactly 1 - E[T]/e.
class DeliverySampler {
public:
    DeliverySampler(double mean_latency, double sampling_period);

    double success_probability() const { return success_; }
    double sample_latency(std::mt19937_64& rng) const;
    bool delivered(double latency) const { return latency < period_; }

private:
    double period_;
    double success_;
};

}  // namespace lae::stability
