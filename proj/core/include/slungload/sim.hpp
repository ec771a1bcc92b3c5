#pragma once

#include <string>
#include <vector>

#include "slungload/minco.hpp"
#include "slungload/scenario.hpp"

namespace slungload {

// Plant state for the closed-loop simulation: the rigid-body + cable state
// augmented with the four rotor speeds, so thrust and torque come out of the
// motor model rather than being applied directly.
struct TruthState {
  SystemState s;
  Eigen::Vector4d n = Eigen::Vector4d::Zero();  // rotor speeds, rad/s
};

TruthState truth_hover(const Eigen::Vector3d& payload_pos,
                       const SystemParams& params);

// One RK4 step of the augmented plant under rotor-speed command n_c:
// translations and the cable through the constrained two-body model, attitude
// at torque level (bias torque included), rotors through the first-order lag.
// Returns the cable tension at the step's first stage.
double truth_step(TruthState& x, const Eigen::Vector4d& n_c,
                  const SystemParams& params, const ExternalForces& ext,
                  const Eigen::Vector3d& torque_bias, double dt);

// Quadratic air drag on one body: 0.5 * rho_air * c_da * |v_rel| * v_rel.
Eigen::Vector3d drag_force(const Eigen::Vector3d& v_body,
                           const Eigen::Vector3d& v_wind, double c_da);

struct SimFrame {
  double t = 0.0;
  Eigen::Vector3d x_q, v_q, x_l, v_l;
  Eigen::Vector3d ref_l;  // payload position reference at t
  Eigen::Vector3d omega;
  double f_cmd = 0.0;   // collective thrust commanded by the tracker, N
  double tension = 0.0;
  double energy = 0.0;  // mechanical energy of the plant, J
  Eigen::Vector3d est_f_q, est_f_l;  // disturbance estimates, N
};

struct RunMetrics {
  double rmse_l_cm = 0.0, max_l_cm = 0.0;
  double rmse_q_cm = 0.0, max_q_cm = 0.0;
  int frames = 0;
  int nmpc_degraded = 0;
  int estimator_stale = 0;
  // Wall-clock statistics. Reported separately from the deterministic
  // outputs: they vary run to run and must not leak into logs that are
  // compared byte-for-byte.
  double mean_solve_ms = 0.0, max_solve_ms = 0.0;
};

struct RunResult {
  bool ok = false;
  std::string message;
  double abort_time = -1.0;  // set when the cable went slack
  std::vector<SimFrame> frames;
  RunMetrics metrics;
};

// Position-error statistics against the logged reference. The quadrotor
// reference comes from the flat map's leading term: l along the normalized
// (reference acceleration + g e_z).
RunMetrics compute_metrics(const std::vector<SimFrame>& frames,
                           const PiecewisePoly& traj,
                           const SystemParams& params);

// Closed-loop run: 1 kHz plant and inner rate loop, tracker + estimator at
// the scenario's control rate. The tracker uses nominal parameters and the
// true state; the estimator sees noisy accelerations. Events (wind, mass
// attach, torque bias) hit the plant only.
RunResult run_scenario(const Scenario& sc, const PiecewisePoly& traj);

// Deterministic outputs: fixed-format text, no timing fields.
void write_run_csv(const RunResult& r, const std::string& path);
void write_metrics_json(const RunResult& r, const std::string& path);
// Wall-clock side channel, excluded from reproducibility comparisons.
void write_timing_json(const RunResult& r, const std::string& path);

struct ReplayResult {
  bool ok = false;
  std::string message;
  double max_err_q = 0.0;  // m, against the flatness-derived states
  double max_err_l = 0.0;
};

// Open-loop consistency check: integrate the rigid plant (thrust + body-rate
// inputs, no rotors) from the flatness-derived state at t0, feeding it the
// flatness-derived inputs evaluated at the RK4 stage times, and measure the
// drift from the flat states.
ReplayResult replay_open_loop(const PiecewisePoly& poly,
                              const SystemParams& params, double t0, double t1,
                              double dt);

// Closed figure-eight (Gerono lemniscate) through fixed waypoints, durations
// scaled until the peak speed matches `peak_speed`.
PiecewisePoly build_fig8_trajectory(const Eigen::Vector2d& center, double a,
                                    double b, double height,
                                    double peak_speed);

struct AblationEntry {
  std::string variant;
  bool ok = false;
  RunMetrics metrics;
};

// Runs plain / indi / force / full on the same scenario, trajectory, and
// seed. Identical noise streams per variant.
std::vector<AblationEntry> run_ablation(const Scenario& base,
                                        const PiecewisePoly& traj);

}  // namespace slungload
