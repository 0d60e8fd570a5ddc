#pragma once

// Sampled-data model of one UAV tracking loop: relative-state dynamics with an
// input delay inside the sampling period and Bernoulli command delivery.
//
// State layout: x = [relative position (3), relative velocity (3)], the
// augmented state appends the previously applied command, zeta = [x, u_prev].

#include <Eigen/Dense>

#include <optional>

namespace lae::control {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct SystemModel {
    Mat A;                 // continuous dynamics, n x n
    Mat B;                 // input coupling, n x m
    Mat Q;                 // process noise covariance, n x n
    Mat K;                 // feedback gain on the augmented state, m x (n + m)
    Mat P;                 // Lyapunov weight, (n + m) x (n + m)
    double decay_rate = 0.95;
    double sampling_period = 0.5;

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index input_dim() const { return B.cols(); }
    Eigen::Index augmented_dim() const { return A.rows() + B.cols(); }

    /// Throws InvalidArgument when shapes disagree, Q is not PSD, P is not SPD
    /// (when present) or the scalar parameters are out of range.
    void validate() const;
};

/// Relative double integrator: velocity integrates the acceleration command.
/// K and P are left empty; see `stabilize`.
SystemModel double_integrator(double sampling_period, double decay_rate, double noise_variance = 1e-4);

struct AugmentedState {
    Vec x;       // relative position and velocity
    Vec u_prev;  // command held from the previous period

    Vec stacked() const;
    static AugmentedState from_stacked(const Vec& zeta, Eigen::Index state_dim);
};

struct Discretization {
    Mat psi;       // e^{A e}
    Mat phi0;      // integral of e^{At}B over [0, exec_window]
    Mat phi1;      // integral of e^{At}B over [exec_window, e]
    Mat phi_hold;  // integral of e^{At}B over [0, e]
    Mat psi_d;
    Mat phi_d;
    Mat psi_h;
    Mat psi_cl;  // empty until a gain is attached
    Mat psi_op;
    double exec_window = 0.0;
};

Mat matrix_exponential(const Mat& M, double t);

/// Integral of e^{At}B over [0, tau], read off the exponential of the block
/// matrix [[A, B], [0, 0]].
Mat input_integral(const Mat& A, const Mat& B, double tau);

/// Builds every open-loop block for a loop whose end-to-end latency is
/// `total_latency`. When the model carries a gain, psi_cl is filled too.
Discretization discretize(const SystemModel& model, double total_latency);

/// psi_cl = psi_d + phi_d K.
void attach_gain(Discretization& disc, const Mat& K);

AugmentedState step(const AugmentedState& state, const Discretization& disc, const Mat& K, bool delivered,
                    const Vec& noise);

double lyapunov_value(const AugmentedState& state, const Mat& P);
double lyapunov_value(const Vec& zeta, const Mat& P);

/// Tr(P Q) with Q zero-padded onto the augmented state.
double noise_floor(const Mat& P, const Mat& Q);

struct BranchValues {
    double v_close;
    double v_open;
    double v_current;
    double trace_pq;
};

BranchValues branch_values(const Vec& zeta, const Discretization& disc, const SystemModel& model);

inline constexpr double kGammaCeilingGap = 1e-9;
inline constexpr double kDegenerateGap = 1e-12;

struct SuccessThreshold {
    double gamma = 0.0;     // clamped to [0, 1 - 1e-9]
    double raw = 0.0;       // unclamped ratio, NaN when degenerate
    bool degenerate = false;  // |V_open - V_close| < 1e-12; gamma is 0
};

SuccessThreshold success_threshold(const AugmentedState& state, const Discretization& disc,
                                   const SystemModel& model);

bool descent_holds(const AugmentedState& state, const Discretization& disc, const SystemModel& model,
                   double success_prob);

struct RiccatiOptions {
    double tolerance = 1e-10;
    int max_iterations = 10000;
};

/// Discrete LQR gain (u = K zeta) for the delivered-branch pair (psi_d, phi_d)
/// with identity weights. Throws Unstabilizable on non-convergence.
Mat design_gain(const SystemModel& model, const Discretization& disc, RiccatiOptions options = {});

/// Solves psi_cl' P psi_cl - contraction P + I = 0, so the delivered branch
/// alone satisfies V_close <= contraction V - |zeta|^2. Requires the spectral
/// radius of psi_cl below sqrt(contraction).
Mat lyapunov_weight(const Mat& psi_cl, double contraction);

double spectral_radius(const Mat& M);

/// Designs K on the discretization at `nominal_latency`, then P from the
/// resulting closed loop at the model's decay rate.
SystemModel stabilize(SystemModel model, double nominal_latency);

}  // namespace lae::control
