#include "lae/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lae/error.hpp"

namespace lae::stability {

StabilityBudget latency_budget(double gamma, double sampling_period, double t_fixed) {
    if (!(gamma >= 0.0 && gamma < 1.0) || !(sampling_period > 0.0) || !(t_fixed >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "latency_budget needs gamma in [0,1), e > 0, t_fixed >= 0");
    }
    StabilityBudget b;
    b.gamma = gamma;
    b.d_req = (1.0 - gamma) * sampling_period;
    b.t_fixed = t_fixed;
    b.t_budget = b.d_req - t_fixed;
    b.feasible = b.t_budget > 0.0;
    return b;
}

double min_bandwidth(double packet_bits, double t_budget, double snr) {
    if (!(t_budget > 0.0)) {
        throw Error(ErrorKind::StabilityInfeasible, "no communication budget left after fixed latencies");
    }
    if (!(snr > 0.0)) throw Error(ErrorKind::NoLink, "zero SNR");
    return packet_bits / (t_budget * std::log2(1.0 + snr));
}

PipelineResult stability_pipeline(const control::AugmentedState& state, const control::Discretization& disc,
                                  const control::SystemModel& model, const latency::UserDevice& user,
                                  const latency::UavNode& uav, const latency::ChannelParams& params) {
    PipelineResult r;
    r.threshold = control::success_threshold(state, disc, model);
    const double gamma = r.threshold.degenerate ? 0.0 : r.threshold.gamma;
    r.budget = latency_budget(gamma, uav.sampling_period, latency::fixed_latency(user, uav));
    if (!r.budget.feasible) {
        r.kappa_min = std::numeric_limits<double>::infinity();
        return r;
    }
    r.kappa_min = min_bandwidth(user.packet_bits, r.budget.t_budget, latency::snr(user, uav, params));
    return r;
}

DeliverySampler::DeliverySampler(double mean_latency, double sampling_period) : period_(sampling_period) {
    if (!(sampling_period > 0.0) || !(mean_latency >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "delivery sampler needs e > 0 and E[T] >= 0");
    }
    success_ = std::clamp(1.0 - mean_latency / sampling_period, 0.0, 1.0);
}

double DeliverySampler::sample_latency(std::mt19937_64& rng) const {
    std::bernoulli_distribution on_time(success_);
    return on_time(rng) ? 0.0 : period_;
}

}  // namespace lae::stability
