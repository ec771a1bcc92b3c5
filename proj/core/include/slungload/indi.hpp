#pragma once

#include <deque>

#include "slungload/dynamics.hpp"

namespace slungload {

// Second-order Butterworth low-pass (bilinear transform, prewarped), direct
// form II transposed, one shared set of coefficients across channels. The
// first sample primes the state so a constant input passes through from the
// start.
class Butterworth2 {
 public:
  void init(double cutoff_hz, double sample_hz, int channels);
  Eigen::VectorXd step(const Eigen::VectorXd& x);

  double b0() const { return b0_; }
  double b1() const { return b1_; }
  double b2() const { return b2_; }
  double a1() const { return a1_; }
  double a2() const { return a2_; }

 private:
  double b0_ = 1.0, b1_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
  Eigen::ArrayXd z1_, z2_;
  bool primed_ = false;
};

// Five-point smooth noise-robust first derivative (two-sample delay, exact
// for cubics). Returns zero until enough history accumulates.
class SmoothDiff {
 public:
  void init(int channels, double dt);
  Eigen::VectorXd step(const Eigen::VectorXd& x);

 private:
  std::deque<Eigen::VectorXd> hist_;
  double dt_ = 1.0;
  int channels_ = 0;
};

struct IndiConfig {
  double cutoff_hz = 10.0;
  double sample_hz = 1000.0;
  // Rate-loop bandwidth sits well under the rotor pole (1/motor_tau = 20 1/s)
  // plus the ~25 ms filter/differentiator group delay; 20 1/s oscillates.
  Eigen::Vector3d k_omega{8.0, 8.0, 8.0};
  int newton_iters = 5;
};

struct IndiDebug {
  Eigen::Vector3d omega_f, omega_dot_f, tau_f, tau_c;
  Eigen::Vector4d n_f, n_c;
  bool saturated = false;
  double alloc_residual = 0.0;
};

Eigen::Vector3d angular_accel_cmd(const Eigen::Vector3d& omega_r,
                                  const Eigen::Vector3d& omega_dot_r,
                                  const Eigen::Vector3d& omega_f,
                                  const Eigen::Vector3d& k_omega);

Eigen::Vector3d control_moment(const Eigen::Vector3d& tau_f,
                               const Eigen::Vector3d& omega_dot_c,
                               const Eigen::Vector3d& omega_dot_f,
                               const Eigen::Vector3d& inertia);

// Rotor-speed solution of [f; tau] = G1 n.^2 + dt_m^-1 G2 (n - n_f): Newton
// from n_f, clamped to [0, n_max].
Eigen::Vector4d allocate(double f_cmd, const Eigen::Vector3d& tau_cmd,
                         const Eigen::Vector4d& n_f,
                         const SystemParams& params, int max_iters,
                         bool* saturated = nullptr,
                         double* residual = nullptr);

// The incremental rate loop: filtered feedback, incremental moment update,
// rotor allocation. Thrust passes straight through to the allocator.
class IndiLoop {
 public:
  IndiLoop(const SystemParams& params, const IndiConfig& cfg = {});

  Eigen::Vector4d step(double f_cmd, const Eigen::Vector3d& omega_ref,
                       const Eigen::Vector3d& omega_meas,
                       const Eigen::Vector4d& n_meas, IndiDebug* dbg = nullptr);

 private:
  SystemParams params_;
  IndiConfig cfg_;
  Butterworth2 filt_omega_, filt_n_;
  SmoothDiff diff_omega_, diff_n_;
};

}  // namespace slungload
