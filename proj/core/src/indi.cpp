#include "slungload/indi.hpp"

#include <cmath>

namespace slungload {

void Butterworth2::init(double cutoff_hz, double sample_hz, int channels) {
  const double k = std::tan(M_PI * cutoff_hz / sample_hz);
  const double q = 1.0 / std::sqrt(2.0);
  const double norm = 1.0 / (1.0 + k / q + k * k);
  b0_ = k * k * norm;
  b1_ = 2.0 * b0_;
  b2_ = b0_;
  a1_ = 2.0 * (k * k - 1.0) * norm;
  a2_ = (1.0 - k / q + k * k) * norm;
  z1_ = Eigen::ArrayXd::Zero(channels);
  z2_ = Eigen::ArrayXd::Zero(channels);
  primed_ = false;
}

Eigen::VectorXd Butterworth2::step(const Eigen::VectorXd& x) {
  if (!primed_) {
    // Steady-state registers for a constant input equal to the first sample.
    z1_ = (1.0 - b0_) * x.array();
    z2_ = (b2_ - a2_) * x.array();
    primed_ = true;
  }
  const Eigen::ArrayXd y = b0_ * x.array() + z1_;
  z1_ = b1_ * x.array() - a1_ * y + z2_;
  z2_ = b2_ * x.array() - a2_ * y;
  return y.matrix();
}

void SmoothDiff::init(int channels, double dt) {
  channels_ = channels;
  dt_ = dt;
  hist_.clear();
}

Eigen::VectorXd SmoothDiff::step(const Eigen::VectorXd& x) {
  hist_.push_back(x);
  if (hist_.size() > 5) hist_.pop_front();
  if (hist_.size() < 5) return Eigen::VectorXd::Zero(channels_);
  // y'[n] ~ (2(y[n-1] - y[n-3]) + y[n] - y[n-4]) / (8h)
  return (2.0 * (hist_[3] - hist_[1]) + hist_[4] - hist_[0]) / (8.0 * dt_);
}

Eigen::Vector3d angular_accel_cmd(const Eigen::Vector3d& omega_r,
                                  const Eigen::Vector3d& omega_dot_r,
                                  const Eigen::Vector3d& omega_f,
                                  const Eigen::Vector3d& k_omega) {
  return k_omega.cwiseProduct(omega_r - omega_f) + omega_dot_r;
}

Eigen::Vector3d control_moment(const Eigen::Vector3d& tau_f,
                               const Eigen::Vector3d& omega_dot_c,
                               const Eigen::Vector3d& omega_dot_f,
                               const Eigen::Vector3d& inertia) {
  return tau_f + inertia.cwiseProduct(omega_dot_c - omega_dot_f);
}

Eigen::Vector4d allocate(double f_cmd, const Eigen::Vector3d& tau_cmd,
                         const Eigen::Vector4d& n_f,
                         const SystemParams& params, int max_iters,
                         bool* saturated, double* residual) {
  // Allocation targets the steady rotor map G1 n^2 only. The spin-up reaction
  // torque G2 n_dot is real but transient: it is measured and fed forward in
  // tau_f by the incremental loop, so modeling it here as a function of the
  // new command counts it twice. Worse, with yaw authority k_m ~ 0.016 k_f the
  // incremental yaw column is the same order as the steady one, and a solver
  // that leans on vanishing spin-up torque trades away collective thrust to
  // chase yaw -- a runaway observed in closed loop, not a theoretical worry.
  const Eigen::Matrix4d g1 = rotor_g1(params.rotor);
  Eigen::Vector4d wrench;
  wrench << f_cmd, tau_cmd;
  Eigen::Vector4d n = n_f;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::Vector4d res = g1 * n.cwiseProduct(n) - wrench;
    const Eigen::Matrix4d jac = g1 * (2.0 * n).asDiagonal();
    n -= jac.partialPivLu().solve(res);
  }
  bool sat = false;
  for (int i = 0; i < 4; ++i) {
    if (n(i) < 0.0 || n(i) > params.rotor.n_max) sat = true;
    n(i) = std::clamp(n(i), 0.0, params.rotor.n_max);
  }
  if (saturated != nullptr) *saturated = sat;
  if (residual != nullptr)
    *residual = (g1 * n.cwiseProduct(n) - wrench).norm();
  return n;
}

IndiLoop::IndiLoop(const SystemParams& params, const IndiConfig& cfg)
    : params_(params), cfg_(cfg) {
  filt_omega_.init(cfg.cutoff_hz, cfg.sample_hz, 3);
  filt_n_.init(cfg.cutoff_hz, cfg.sample_hz, 4);
  diff_omega_.init(3, 1.0 / cfg.sample_hz);
  diff_n_.init(4, 1.0 / cfg.sample_hz);
}

Eigen::Vector4d IndiLoop::step(double f_cmd, const Eigen::Vector3d& omega_ref,
                               const Eigen::Vector3d& omega_meas,
                               const Eigen::Vector4d& n_meas, IndiDebug* dbg) {
  const Eigen::Vector3d omega_f = filt_omega_.step(omega_meas);
  const Eigen::Vector4d n_f = filt_n_.step(n_meas);
  const Eigen::Vector3d omega_dot_f = diff_omega_.step(omega_f);
  const Eigen::Vector4d n_dot_f = diff_n_.step(n_f);

  const Eigen::Vector3d omega_dot_c = angular_accel_cmd(
      omega_ref, Eigen::Vector3d::Zero(), omega_f, cfg_.k_omega);
  const Eigen::Vector3d tau_f = rotor_forward(n_f, n_dot_f, params_.rotor).tau;
  const Eigen::Vector3d tau_c =
      control_moment(tau_f, omega_dot_c, omega_dot_f, params_.inertia);

  bool sat = false;
  double res = 0.0;
  const Eigen::Vector4d n_c =
      allocate(f_cmd, tau_c, n_f, params_, cfg_.newton_iters, &sat, &res);
  if (dbg != nullptr) {
    dbg->omega_f = omega_f;
    dbg->omega_dot_f = omega_dot_f;
    dbg->tau_f = tau_f;
    dbg->tau_c = tau_c;
    dbg->n_f = n_f;
    dbg->n_c = n_c;
    dbg->saturated = sat;
    dbg->alloc_residual = res;
  }
  return n_c;
}

}  // namespace slungload
