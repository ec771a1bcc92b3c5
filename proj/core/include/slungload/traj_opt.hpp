#pragma once

#include <string>

#include "slungload/esdf.hpp"
#include "slungload/kino_astar.hpp"
#include "slungload/minco.hpp"
#include "slungload/numopt.hpp"

namespace slungload {

struct DynamicLimits {
  double f_min = 2.0;    // thrust floor, N
  double f_max = 20.0;   // thrust ceiling, N
  double theta_max = 60.0 * M_PI / 180.0;
  double v_max = 4.0;    // payload speed, m/s
  double a_max = 5.7;    // payload acceleration, m/s^2
  double eps_tension = 0.1;  // floor on a_z + g, m/s^2
  double d_l = 0.15;     // payload/cable safe radius, m
  double d_q = 0.3;      // quadrotor safe radius, m
};

struct PlannerWeights {
  double time = 65536.0;     // duration pressure
  double scale = 1.0;        // multiplies the whole penalty functional
  double collision = 1.0e8;
  double thrust = 1.0e4;
  double tilt = 1.0e4;
  double vel = 1.0e5;
  double acc = 1.0e5;
  double tension = 1.0e5;
  double singular = 1.0e4;   // flat-map breakdown at a sample (finite, large)
  int kappa = 32;            // quadrature intervals per piece
  double smooth_mu = 1.0e-2;

  // The optimizer aims slightly inside the true limits so the raw-limit audit
  // has slack to pass; the audit itself never sees these.
  double vel_margin = 0.99;
  double acc_margin = 0.99;
  double thrust_margin = 0.98;         // of the half-range
  double tilt_margin = 0.5 * M_PI / 180.0;
  double clearance_margin = 0.1;       // m, on top of the safe radii
};

struct PlannerConfig {
  DynamicLimits limits;
  PlannerWeights weights;
  SearchConfig search;       // kinodynamic front-end
  int n_bubbles = 6;
  double piece_len = 1.0;    // m of path per spline piece
  int min_pieces = 3;
  double audit_dt = 0.01;
  LbfgsOptions lbfgs{
      .max_iters = 1500,
      // Penalty magnitudes sit around 1e5-1e6, so chasing the unconstrained
      // 1e-6 sup-norm would spin; violations move at slopes ~1e3 already.
      .grad_tol = 1e-2,
  };
};

// Worst-case values over dense sampling with the raw constraint formulas —
// deliberately independent of the optimizer's quadrature and margins.
struct ConstraintAudit {
  double max_vel = 0.0;
  double max_acc = 0.0;
  double min_thrust = 0.0;
  double max_thrust = 0.0;
  double max_tilt = 0.0;          // rad
  double min_tension_accel = 0.0; // min of a_z + g, m/s^2
  double min_tension = 0.0;       // m_l * ||a + g e_z||, N
  double min_clearance = 0.0;     // min over bubbles of distance - radius, m
  bool map_checked = false;

  // Violations in natural units against the given limits (0 when satisfied).
  double worst_violation(const DynamicLimits& lim) const;
  bool feasible(const DynamicLimits& lim, double tol = 1e-3,
                double clearance_slack = 0.1) const;
  std::string to_json() const;
};

// Thrust magnitude and tilt cosine from payload derivatives, with analytic
// gradients w.r.t. acceleration, jerk, and snap.
struct ThrustTilt {
  double f = 0.0;
  double cos_tilt = 1.0;
  Eigen::Vector3d df_da, df_dj, df_ds;
  Eigen::Vector3d dct_da, dct_dj, dct_ds;
};
ThrustTilt thrust_and_tilt(const Eigen::Vector3d& acc, const Eigen::Vector3d& jerk,
                           const Eigen::Vector3d& snap, const SystemParams& params);

// Integrated soft-constraint cost S over the spline, with gradients w.r.t.
// polynomial coefficients and piece durations. `map` may be null (free space).
double penalty_eval(const PiecewisePoly& poly, const EsdfMap* map,
                    const DynamicLimits& limits, const PlannerWeights& weights,
                    const SystemParams& params, int n_bubbles,
                    Eigen::MatrixX3d& grad_c, Eigen::VectorXd& grad_t);

ConstraintAudit audit_trajectory(const PiecewisePoly& poly, const EsdfMap* map,
                                 const DynamicLimits& limits,
                                 const SystemParams& params, int n_bubbles,
                                 double dt = 0.01);

// Spatio-temporal refinement: decision variables are the virtual times (one
// per piece) and the interior waypoints; every evaluation re-solves the
// spline and pulls the penalty gradients back through it.
class TrajOpt {
 public:
  TrajOpt(const EsdfMap* map, const SystemParams& params,
          const PlannerConfig& cfg);

  void initialize(const BoundaryCond& head, const BoundaryCond& tail,
                  const Eigen::MatrixX3d& waypoints,
                  const Eigen::VectorXd& durations);
  // Waypoints/durations resampled from a search path (piece count from its
  // arc length, at least min_pieces).
  void initialize_from_path(const Eigen::Vector3d& start,
                            const Eigen::Vector3d& goal, const KinoPath& path);

  int pieces() const { return spline_.pieces(); }
  Eigen::VectorXd pack() const;  // current [sigma; interior waypoints]
  double objective(const Eigen::VectorXd& xi, Eigen::VectorXd& grad);
  LbfgsResult optimize();
  const PiecewisePoly& poly() const { return spline_.poly(); }

 private:
  void unpack(const Eigen::VectorXd& xi);

  const EsdfMap* map_;
  SystemParams params_;
  PlannerConfig cfg_;
  MincoSpline spline_;
  Eigen::MatrixX3d waypoints_;
  Eigen::VectorXd durations_;
};

struct PlanResult {
  bool success = false;
  PiecewisePoly poly;
  ConstraintAudit audit;
  double cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
  double search_ms = 0.0;
  double optimize_ms = 0.0;
  std::string failure_reason;

  std::string report_json() const;
};

// Full pipeline: kinodynamic search, spline refinement, raw-limit audit.
PlanResult plan_trajectory(const EsdfMap& map, const SystemParams& params,
                           const PlannerConfig& cfg,
                           const Eigen::Vector3d& start,
                           const Eigen::Vector3d& goal);

}  // namespace slungload
