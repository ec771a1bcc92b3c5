#pragma once

#include <vector>

#include "slungload/dynamics.hpp"
#include "slungload/minco.hpp"

namespace slungload {

// Stage cost weights act on the 21-dim tracking residual
// [x_Q, x_L, v_Q, v_L, rho, rho_dot, attitude-tangent] and the 4-dim input
// residual [f, omega]. Per-stage decay follows Q_k = exp(-k b/N) Q.
struct NmpcConfig {
  int horizon = 20;
  double dt = 0.05;
  Eigen::VectorXd q_diag;    // 21; default set in make_default()
  Eigen::VectorXd qe_diag;   // 21; default 10x q_diag
  Eigen::Vector4d h_diag{0.1, 0.5, 0.5, 0.5};
  double b_x = 1.0;
  double b_u = 1.0;
  Eigen::Vector4d u_min{1.0, -8.0, -8.0, -4.0};
  Eigen::Vector4d u_max{30.0, 8.0, 8.0, 4.0};
  double fd_h = 1e-4;        // linearization step in the state tangent
  // The prediction model treats thrust and body rate as first-order responses
  // to their commands instead of instantaneous values. Dropping these lags
  // turns the cable-swing damping loop into an exciter: the real rotors and
  // rate loop answer ~50-100 ms late, which at the pendulum frequency converts
  // intended damping into negative damping.
  double tau_f = 0.05;       // thrust response constant, s
  double tau_omega = 0.10;   // body-rate response constant, s

  static NmpcConfig make_default();
};

// Actuation state carried alongside the vehicle state: the thrust actually
// produced right now and the body rate actually flown. Measured at solve time
// and propagated through the first-order lags above inside the predictor.
struct ActuatorState {
  double f = 0.0;
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
};

struct ReferenceWindow {
  std::vector<SystemState> states;   // horizon+1
  std::vector<ControlInput> inputs;  // horizon
};

struct NmpcSolution {
  std::vector<SystemState> states;   // horizon+1 shooting nodes
  std::vector<ActuatorState> act;    // horizon+1 actuator nodes
  std::vector<ControlInput> inputs;  // horizon commanded inputs
  bool valid = false;
};

struct NmpcDiagnostics {
  double gap_norm = 0.0;       // max shooting-gap norm before the step
  double residual_norm = 0.0;  // stage residual RMS at the linearization point
  int clipped = 0;             // input components clamped at a bound
  bool degraded = false;       // sweep failed; fell back to warm start
};

// 15-dim tangent-space operations used by the shooting linearization: additive
// on positions/velocities, renormalizing on the cable direction, exponential
// on the quaternion. Exposed for the tests.
SystemState state_add(const SystemState& z, const Eigen::VectorXd& delta,
                      const SystemParams& params);
Eigen::VectorXd state_diff(const SystemState& a, const SystemState& b);

// 21-dim tracking residual of `z` against reference `ref`.
Eigen::VectorXd tracking_residual(const SystemState& z, const SystemState& ref,
                                  const SystemParams& params);

ReferenceWindow build_reference(const PiecewisePoly& poly, double t0,
                                const NmpcConfig& cfg,
                                const SystemParams& params);

std::vector<Eigen::VectorXd> decay_weights(const NmpcConfig& cfg);

ControlInput rti_step(const SystemState& x_now, const ActuatorState& act_now,
                      const ReferenceWindow& ref, const ExternalForces& ext,
                      const NmpcConfig& cfg, const SystemParams& params,
                      NmpcSolution& warm, NmpcDiagnostics* diag = nullptr);

void shift_warm_start(NmpcSolution& sol);

}  // namespace slungload
