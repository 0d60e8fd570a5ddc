#include "lae/control.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <string>

#include "lae/error.hpp"

namespace lae::control {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

bool is_symmetric(const Mat& M, double tol) {
    return M.rows() == M.cols() && (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, M.cwiseAbs().maxCoeff());
}

}  // namespace

void SystemModel::validate() const {
    const auto n = A.rows();
    require(n > 0 && A.cols() == n, "A must be square and nonempty");
    require(B.rows() == n && B.cols() > 0, "B must have as many rows as A");
    require(Q.rows() == n && Q.cols() == n, "Q must match A");
    require(A.allFinite() && B.allFinite() && Q.allFinite(), "model matrices must be finite");
    require(is_symmetric(Q, 1e-12), "Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> qe(Q, Eigen::EigenvaluesOnly);
    require(qe.eigenvalues().minCoeff() >= -1e-12, "Q must be positive semidefinite");
    require(decay_rate > 0.0 && decay_rate < 1.0, "decay_rate must lie in (0, 1)");
    require(sampling_period > 0.0, "sampling_period must be positive");
    const auto na = augmented_dim();
    if (K.size() > 0) require(K.rows() == B.cols() && K.cols() == na, "K must be m x (n + m)");
    if (P.size() > 0) {
        require(P.rows() == na && P.cols() == na, "P must be (n + m) square");
        require(is_symmetric(P, 1e-9), "P must be symmetric");
        require(Eigen::LLT<Mat>(P).info() == Eigen::Success, "P must be positive definite");
    }
}

SystemModel double_integrator(double sampling_period, double decay_rate, double noise_variance) {
    SystemModel m;
    m.A = Mat::Zero(6, 6);
    m.A.topRightCorner(3, 3).setIdentity();
    m.B = Mat::Zero(6, 3);
    m.B.bottomRows(3).setIdentity();
    m.Q = noise_variance * Mat::Identity(6, 6);
    m.decay_rate = decay_rate;
    m.sampling_period = sampling_period;
    return m;
}

Vec AugmentedState::stacked() const {
    Vec z(x.size() + u_prev.size());
    z << x, u_prev;
    return z;
}

AugmentedState AugmentedState::from_stacked(const Vec& zeta, Eigen::Index state_dim) {
    return {zeta.head(state_dim), zeta.tail(zeta.size() - state_dim)};
}

Mat matrix_exponential(const Mat& M, double t) {
    require(M.rows() == M.cols(), "matrix_exponential needs a square matrix");
    require(M.allFinite() && std::isfinite(t), "matrix_exponential needs finite input");
    require(t >= 0.0, "matrix_exponential needs t >= 0");
    if (t == 0.0) return Mat::Identity(M.rows(), M.cols());
    const Mat scaled = M * t;
    return scaled.exp();
}

Mat input_integral(const Mat& A, const Mat& B, double tau) {
    const auto n = A.rows();
    const auto m = B.cols();
    if (tau == 0.0) return Mat::Zero(n, m);
    Mat aug = Mat::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = A;
    aug.topRightCorner(n, m) = B;
    return matrix_exponential(aug, tau).topRightCorner(n, m);
}

Discretization discretize(const SystemModel& model, double total_latency) {
    model.validate();
    const double e = model.sampling_period;
    if (!(total_latency >= 0.0)) throw Error(ErrorKind::InvalidArgument, "latency must be nonnegative");
    if (total_latency > e) {
        throw Error(ErrorKind::InfeasibleLatency,
                    "latency " + std::to_string(total_latency) + " s exceeds sampling period " + std::to_string(e) + " s");
    }
    const auto n = model.state_dim();
    const auto m = model.input_dim();

    Discretization d;
    d.exec_window = e - total_latency;
    d.psi = matrix_exponential(model.A, e);
    d.phi0 = input_integral(model.A, model.B, d.exec_window);
    d.phi_hold = input_integral(model.A, model.B, e);
    d.phi1 = d.phi_hold - d.phi0;

    d.psi_d = Mat::Zero(n + m, n + m);
    d.psi_d.topLeftCorner(n, n) = d.psi;
    d.psi_d.topRightCorner(n, m) = d.phi1;

    d.phi_d = Mat::Zero(n + m, m);
    d.phi_d.topRows(n) = d.phi0;
    d.phi_d.bottomRows(m).setIdentity();

    d.psi_h = Mat::Zero(n + m, n + m);
    d.psi_h.topLeftCorner(n, n) = d.psi;
    d.psi_h.topRightCorner(n, m) = d.phi_hold;
    d.psi_h.bottomRightCorner(m, m).setIdentity();
    d.psi_op = d.psi_h;

    if (model.K.size() > 0) attach_gain(d, model.K);
    return d;
}

void attach_gain(Discretization& disc, const Mat& K) {
    require(K.rows() == disc.phi_d.cols() && K.cols() == disc.psi_d.cols(), "gain shape does not match discretization");
    disc.psi_cl = disc.psi_d + disc.phi_d * K;
}

AugmentedState step(const AugmentedState& state, const Discretization& disc, const Mat& K, bool delivered,
                    const Vec& noise) {
    const Vec zeta = state.stacked();
    require(zeta.size() == disc.psi_d.rows(), "state does not match discretization");
    require(noise.size() == state.x.size(), "noise must match the physical state");
    require(K.rows() == state.u_prev.size() && K.cols() == zeta.size(), "gain shape does not match state");

    const auto n = state.x.size();
    AugmentedState next;
    if (delivered) {
        const Vec u = K * zeta;
        next.x = disc.psi_d.topRows(n) * zeta + disc.phi_d.topRows(n) * u + noise;
        next.u_prev = u;
    } else {
        next.x = disc.psi_h.topRows(n) * zeta + noise;
        next.u_prev = state.u_prev;
    }
    return next;
}

double lyapunov_value(const Vec& zeta, const Mat& P) {
    return zeta.dot(P * zeta);
}

double lyapunov_value(const AugmentedState& state, const Mat& P) {
    return lyapunov_value(state.stacked(), P);
}

double noise_floor(const Mat& P, const Mat& Q) {
    const auto n = Q.rows();
    return (P.topLeftCorner(n, n) * Q).trace();
}

BranchValues branch_values(const Vec& zeta, const Discretization& disc, const SystemModel& model) {
    require(disc.psi_cl.size() > 0, "discretization has no closed-loop matrix; attach a gain first");
    const Vec closed = disc.psi_cl * zeta;
    const Vec open = disc.psi_op * zeta;
    return {lyapunov_value(closed, model.P), lyapunov_value(open, model.P), lyapunov_value(zeta, model.P),
            noise_floor(model.P, model.Q)};
}

SuccessThreshold success_threshold(const AugmentedState& state, const Discretization& disc,
                                   const SystemModel& model) {
    const auto v = branch_values(state.stacked(), disc, model);
    const double gap = v.v_open - v.v_close;
    SuccessThreshold out;
    if (std::abs(gap) < kDegenerateGap) {
        out.degenerate = true;
        out.raw = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.raw = (v.v_open - model.decay_rate * v.v_current - v.trace_pq) / gap;
    out.gamma = std::clamp(out.raw, 0.0, 1.0 - kGammaCeilingGap);
    return out;
}

bool descent_holds(const AugmentedState& state, const Discretization& disc, const SystemModel& model,
                   double success_prob) {
    require(success_prob >= 0.0 && success_prob <= 1.0, "success probability must lie in [0, 1]");
    const auto v = branch_values(state.stacked(), disc, model);
    const double lhs = success_prob * v.v_close + (1.0 - success_prob) * v.v_open;
    const double rhs = model.decay_rate * v.v_current + v.trace_pq;
    // Relative slack so that p = gamma tests as equality despite rounding.
    return lhs <= rhs + 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

Mat design_gain(const SystemModel& model, const Discretization& disc, RiccatiOptions options) {
    const Mat& A = disc.psi_d;
    const Mat& B = disc.phi_d;
    const auto na = A.rows();
    const auto m = B.cols();
    const Mat Qw = Mat::Identity(na, na);
    const Mat Rw = Mat::Identity(m, m);
    (void)model;

    Mat S = Qw;
    for (int it = 0; it < options.max_iterations; ++it) {
        const Mat BtS = B.transpose() * S;
        const Mat gain = (Rw + BtS * B).ldlt().solve(BtS * A);
        Mat next = A.transpose() * S * A - A.transpose() * S * B * gain + Qw;
        next = 0.5 * (next + next.transpose());
        if (!next.allFinite()) break;
        const double delta = (next - S).cwiseAbs().maxCoeff();
        S = std::move(next);
        if (delta <= options.tolerance) {
            const Mat BtSc = B.transpose() * S;
            return -(Rw + BtSc * B).ldlt().solve(BtSc * A);
        }
    }
    throw Error(ErrorKind::Unstabilizable, "Riccati iteration did not converge in " +
                                               std::to_string(options.max_iterations) + " iterations");
}

double spectral_radius(const Mat& M) {
    Eigen::EigenSolver<Mat> es(M, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat lyapunov_weight(const Mat& psi_cl, double contraction) {
    const auto n = psi_cl.rows();
    const double radius = spectral_radius(psi_cl);
    if (!(radius * radius < contraction)) {
        throw Error(ErrorKind::Unstabilizable, "closed loop too slow for the requested contraction (radius " +
                                                   std::to_string(radius) + ")");
    }
    // vec(A' P A) = (A' kron A') vec(P), column-major.
    const Mat At = psi_cl.transpose();
    const Mat lhs = Eigen::kroneckerProduct(At, At).eval() - contraction * Mat::Identity(n * n, n * n);
    const Mat ident = Mat::Identity(n, n);
    const Vec rhs = -Eigen::Map<const Vec>(ident.data(), n * n);
    const Vec p = lhs.partialPivLu().solve(rhs);
    Mat P = Eigen::Map<const Mat>(p.data(), n, n);
    return 0.5 * (P + P.transpose());
}

SystemModel stabilize(SystemModel model, double nominal_latency) {
    model.K.resize(0, 0);
    model.P.resize(0, 0);
    auto disc = discretize(model, nominal_latency);
    model.K = design_gain(model, disc);
    attach_gain(disc, model.K);
    model.P = lyapunov_weight(disc.psi_cl, model.decay_rate);
    model.validate();
    return model;
}

}  // namespace lae::control
