#pragma once

#include <deque>
#include <vector>

#include "slungload/dynamics.hpp"
#include "slungload/numopt.hpp"

namespace slungload {

struct ForceMeasurement {
  double stamp = 0.0;
  Eigen::Vector3d acc_q = Eigen::Vector3d::Zero();  // world frame, m/s^2
  Eigen::Vector3d acc_l = Eigen::Vector3d::Zero();
  Eigen::Vector3d rho = -Eigen::Vector3d::UnitZ();  // unit, quad -> payload
  Eigen::Vector3d thrust_vec = Eigen::Vector3d::Zero();  // f R e_z, world, N
};

struct ForceEstimate {
  Eigen::Vector3d f_q = Eigen::Vector3d::Zero();  // window means
  Eigen::Vector3d f_l = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> f_q_samples;
  std::vector<Eigen::Vector3d> f_l_samples;
  double residual_norm = 0.0;  // RMS of the physics residuals at the solution
  bool stale = false;
};

struct EstimatorConfig {
  int window = 20;
  double huber_delta = 1.0;  // N
  double k_reg = 0.5;        // weight of the spread-around-the-mean term
  LbfgsOptions lbfgs;

  EstimatorConfig() {
    lbfgs.max_iters = 80;
    lbfgs.grad_tol = 1e-8;
  }
};

// Splits a force into its component along the cable and the remainder.
void decompose_along_cable(const Eigen::Vector3d& f, const Eigen::Vector3d& rho,
                           Eigen::Vector3d& parallel,
                           Eigen::Vector3d& perpendicular);

// Sliding-window robust least squares over per-sample disturbance forces
// (f_q, f_l). Three residuals per sample: total momentum balance, the
// quadrotor balance projected off the cable axis, and the gauge condition
// f_l perpendicular to rho that pins down the otherwise-free along-cable
// split.
class ForceEstimator {
 public:
  explicit ForceEstimator(const SystemParams& params,
                          const EstimatorConfig& cfg = {});

  bool push(const ForceMeasurement& m);
  ForceEstimate estimate();

  int size() const { return static_cast<int>(window_.size()); }
  int rejected() const { return rejected_; }

  // Objective over the stacked unknowns [f_q_0, f_l_0, ..., f_q_{W-1},
  // f_l_{W-1}]; exposed for the gradient-check tests.
  double objective(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

 private:
  SystemParams params_;
  EstimatorConfig cfg_;
  std::deque<ForceMeasurement> window_;
  Eigen::VectorXd warm_;
  double last_stamp_ = -std::numeric_limits<double>::infinity();
  int rejected_ = 0;
  ForceEstimate last_;
  bool has_last_ = false;
};

}  // namespace slungload
