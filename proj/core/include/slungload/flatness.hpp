#pragma once

#include <array>
#include <vector>

#include "slungload/dynamics.hpp"

namespace slungload {

// Flat outputs and their time derivatives at one instant. derivs[k] is the
// k-th derivative of the payload position; order 5 is only needed when body
// rates are requested (the attitude depends on the cable direction's second
// derivative, so its rate pulls in one more order).
struct FlatSnapshot {
  std::array<Eigen::Vector3d, 6> derivs{
      Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
      Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
      Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  double psi = 0.0;
  double psi_dot = 0.0;
};

struct FlatState {
  SystemState state;
  double f = 0.0;                                   // thrust, N
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // body rates, rad/s
  double t_cable = 0.0;                             // tension, N
  Eigen::Vector3d rho_ddot = Eigen::Vector3d::Zero();
};

// Cable must be taut: ||a_L + g e_z|| above this margin (m/s^2), matching the
// planner's tension margin.
inline constexpr double kTautEps = 0.1;

// Derivatives of the unit vector u = w/||w|| through order two, with the
// intermediates needed for the adjoint pass. Third order is provided
// separately (only the rate computation wants it).
struct UnitChain {
  Eigen::Vector3d w, wd, wdd;
  double n = 0.0, nd = 0.0, ndd = 0.0;
  Eigen::Vector3d u, ud, udd;
};

UnitChain unit_chain(const Eigen::Vector3d& w, const Eigen::Vector3d& wd,
                     const Eigen::Vector3d& wdd);

Eigen::Vector3d unit_chain_third(const UnitChain& c, const Eigen::Vector3d& w3);

// Reverse-mode accumulation: given adjoints of (u, ud, udd), add the
// corresponding adjoints of (w, wd, wdd). Exact to rounding; verified against
// finite differences in the planner's gradient gate.
void unit_chain_backward(const UnitChain& c, const Eigen::Vector3d& gu,
                         const Eigen::Vector3d& gud, const Eigen::Vector3d& gudd,
                         Eigen::Vector3d& gw, Eigen::Vector3d& gwd,
                         Eigen::Vector3d& gwdd);

// Full flat map: payload trajectory derivatives + yaw -> state, inputs,
// tension. Throws std::domain_error on taut violation or a degenerate thrust
// direction.
FlatState flat_to_state(const FlatSnapshot& snap, const SystemParams& params);

struct Bubble {
  Eigen::Vector3d center;
  double radius;
};

// n_bubbles+1 spheres along the cable from payload (j=0) to quadrotor (j=N),
// radius d_l for the payload/cable spheres and d_q for the quadrotor sphere.
std::vector<Bubble> system_bubbles(const Eigen::Vector3d& x_l,
                                   const Eigen::Vector3d& a_l,
                                   const SystemParams& params, int n_bubbles,
                                   double d_l = 0.15, double d_q = 0.3);

}  // namespace slungload
