#include "lae/latency.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lae/error.hpp"

namespace lae::latency {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

}  // namespace

void ChannelParams::validate() const {
    require(h0 > 0.0, "h0 must be positive");
    require(path_loss_exp > 0.0, "path loss exponent must be positive");
    require(noise_power > 0.0, "noise power must be positive");
}

void UserDevice::validate() const {
    require(position.allFinite(), "user position must be finite");
    require(tx_power >= 0.0, "tx_power must be nonnegative");
    require(packet_bits > 0.0, "packet_bits must be positive");
    require(t_pos >= 0.0 && t_read >= 0.0 && t_comp >= 0.0, "user latencies must be nonnegative");
    require(urgency >= 0.0, "urgency must be nonnegative");
}

void UavNode::validate() const {
    require(position.allFinite(), "uav position must be finite");
    require(cpu_hz > 0.0, "cpu_hz must be positive");
    require(cycles_per_bit >= 0.0, "cycles_per_bit must be nonnegative");
    require(t_base >= 0.0, "t_base must be nonnegative");
    require(time_constant > 0.0, "time_constant must be positive");
    require(bandwidth_total > 0.0, "bandwidth_total must be positive");
    require(sampling_period > 0.0, "sampling_period must be positive");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return db_to_linear(dbm) * 1e-3; }

double channel_gain(const UserDevice& user, const UavNode& uav, const ChannelParams& params) {
    const double d = (uav.position - user.position).norm();
    if (d == 0.0) throw Error(ErrorKind::CoincidentPosition, "user and UAV share a position");
    return params.h0 * std::pow(d, -params.path_loss_exp);
}

double snr(const UserDevice& user, const UavNode& uav, const ChannelParams& params) {
    return user.tx_power * channel_gain(user, uav, params) / params.noise_power;
}

double data_rate(double bandwidth_hz, double snr) {
    require(bandwidth_hz >= 0.0, "bandwidth must be nonnegative");
    return bandwidth_hz * std::log2(1.0 + snr);
}

double comm_latency(double packet_bits, double rate) {
    if (packet_bits == 0.0) return 0.0;
    if (!(rate > 0.0)) throw Error(ErrorKind::NoLink, "zero data rate");
    return packet_bits / rate;
}

double sense_latency(const UserDevice& user) { return user.t_pos + user.t_read; }

double compute_latency(const UserDevice& user, const UavNode& uav) {
    require(uav.cpu_hz > 0.0, "cpu_hz must be positive");
    return user.t_comp + uav.t_base + user.packet_bits * uav.cycles_per_bit / uav.cpu_hz;
}

double control_latency(const UavNode& uav) {
    require(uav.time_constant > 0.0, "time_constant must be positive");
    return 4.0 * uav.time_constant;
}

double first_order_response(double v0, double v_cmd, double mu, double t) {
    require(mu > 0.0 && t >= 0.0, "first_order_response needs mu > 0 and t >= 0");
    return v_cmd + (v0 - v_cmd) * std::exp(-t / mu);
}

double fixed_latency(const UserDevice& user, const UavNode& uav) {
    return sense_latency(user) + compute_latency(user, uav) + control_latency(uav);
}

LatencyBreakdown total_latency(const UserDevice& user, const UavNode& uav, double bandwidth_hz,
                               const ChannelParams& params) {
    LatencyBreakdown out;
    out.sense = sense_latency(user);
    out.compute = compute_latency(user, uav);
    out.control = control_latency(uav);
    out.comm = comm_latency(user.packet_bits, data_rate(bandwidth_hz, snr(user, uav, params)));
    out.total = out.sense + out.compute + out.comm + out.control;
    return out;
}

std::optional<double> aggregate_latency(std::span<const UserDevice> users, const UavNode& uav,
                                        std::span<const double> allocations_hz, const ChannelParams& params) {
    require(users.size() == allocations_hz.size(), "one allocation per user required");
    if (users.empty()) return std::nullopt;
    double worst = 0.0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        worst = std::max(worst, total_latency(users[i], uav, allocations_hz[i], params).total);
    }
    return worst;
}

}  // namespace lae::latency
