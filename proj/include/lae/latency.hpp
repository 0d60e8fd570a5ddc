#pragma once

// End-to-end latency of one sensing -> communication -> computing -> control
// cycle between a ground user and a UAV.

#include <Eigen/Dense>

#include <optional>
#include <span>

namespace lae::latency {

using Vec3 = Eigen::Vector3d;

struct ChannelParams {
    double h0 = 1e-4;             // reference gain at 1 m (-40 dB)
    double path_loss_exp = 2.0;
    double noise_power = 1e-13;   // W (-100 dBm)

    void validate() const;
};

struct UserDevice {
    Vec3 position = Vec3::Zero();
    double tx_power = 0.2;        // W
    double packet_bits = 64000;
    double t_pos = 0.1;
    double t_read = 0.002;
    double t_comp = 0.001;
    double urgency = 1.0;

    void validate() const;
};

struct UavNode {
    Vec3 position = Vec3::Zero();
    double cpu_hz = 1e9;
    double cycles_per_bit = 1000;
    double t_base = 0.002;
    double time_constant = 0.005;
    double bandwidth_total = 20e6;  // Hz
    double unit_cost = 0.2;
    double sampling_period = 0.5;

    void validate() const;
};

struct LatencyBreakdown {
    double sense = 0;
    double comm = 0;
    double compute = 0;
    double control = 0;
    double total = 0;
};

double db_to_linear(double db);
double dbm_to_watts(double dbm);

double channel_gain(const UserDevice& user, const UavNode& uav, const ChannelParams& params);
double snr(const UserDevice& user, const UavNode& uav, const ChannelParams& params);
double data_rate(double bandwidth_hz, double snr);
double comm_latency(double packet_bits, double rate);
double sense_latency(const UserDevice& user);
double compute_latency(const UserDevice& user, const UavNode& uav);
double control_latency(const UavNode& uav);
double first_order_response(double v0, double v_cmd, double mu, double t);

/// Every latency term except communication.
double fixed_latency(const UserDevice& user, const UavNode& uav);

LatencyBreakdown total_latency(const UserDevice& user, const UavNode& uav, double bandwidth_hz,
                               const ChannelParams& params);

/// Maximum end-to-end latency over the users attached to `uav`; nullopt when
/// no users are attached (the loop is idle).
std::optional<double> aggregate_latency(std::span<const UserDevice> users, const UavNode& uav,
                                        std::span<const double> allocations_hz, const ChannelParams& params);

}  // namespace lae::latency
