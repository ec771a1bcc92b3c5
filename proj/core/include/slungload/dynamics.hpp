#pragma once

#include <Eigen/Dense>
#include <string>

namespace slungload {

// Geometry of the rotor set: arm length a and azimuth beta place the four
// rotors at (+-a_x, +-a_y) with a_x = a cos(beta), a_y = a sin(beta).
struct RotorGeometry {
  double k_f = 8.5e-6;   // thrust coefficient, N/(rad/s)^2
  double k_m = 1.4e-7;   // drag-torque coefficient, N*m/(rad/s)^2
  double arm = 0.12;     // arm length, m
  double beta = M_PI / 4.0;
  double i_p = 1.0e-5;   // rotor axial inertia, kg*m^2
  double motor_tau = 0.05;  // first-order motor time constant, s
  double n_max = 1200.0;    // rotor speed ceiling, rad/s

  double ax() const { return arm * std::cos(beta); }
  double ay() const { return arm * std::sin(beta); }
};

struct SystemParams {
  double m_q = 1.0;    // quadrotor mass, kg
  double m_l = 0.285;  // payload mass, kg
  double l = 0.6;      // cable length, m
  Eigen::Vector3d inertia{8.1e-3, 8.1e-3, 1.42e-2};  // body inertia diagonal
  double g = 9.81;
  RotorGeometry rotor;

  double total_mass() const { return m_q + m_l; }
};

// Full rigid-body + cable state. rho is the unit vector from the quadrotor to
// the payload (hanging at rest: -e_z); x_q is redundant with x_l - l*rho and
// is refreshed by normalize().
struct SystemState {
  Eigen::Vector3d x_q = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_q = Eigen::Vector3d::Zero();
  Eigen::Vector3d x_l = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_l = Eigen::Vector3d::Zero();
  Eigen::Vector3d rho = -Eigen::Vector3d::UnitZ();
  Eigen::Vector3d rho_dot = Eigen::Vector3d::Zero();
  Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();

  static SystemState hover(const Eigen::Vector3d& payload_pos,
                           const SystemParams& params);
};

struct ControlInput {
  double f = 0.0;                                   // collective thrust, N
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // body rates, rad/s
};

struct ExternalForces {
  Eigen::Vector3d f_q = Eigen::Vector3d::Zero();  // world frame, N
  Eigen::Vector3d f_l = Eigen::Vector3d::Zero();
};

struct StateDerivative {
  Eigen::Vector3d x_q_dot, v_q_dot, x_l_dot, v_l_dot;
  Eigen::Vector3d rho_dot, rho_ddot;
  Eigen::Vector4d q_dot;  // (w, x, y, z) order
  double tension = 0.0;   // cable tension actually in play, N
};

// Thrust and body torque produced by the rotor set at speeds n with
// accelerations n_dot: [f; tau] = G1 * n.^2 + G2 * n_dot.
struct RotorWrench {
  double f = 0.0;
  Eigen::Vector3d tau = Eigen::Vector3d::Zero();
};

// Cable tension in Newtons for a taut massless cable. Derived by eliminating
// the internal force from the two translational equations under the rigid
// constraint rho.(a_q - a_l) = l |rho_dot|^2.
double cable_tension(const SystemState& s, double thrust,
                     const SystemParams& params, const ExternalForces& ext);

// Time derivative of the coupled system with the cable taut. The commanded
// body rates drive the attitude directly (rate-loop model); thrust acts along
// the current body z axis.
StateDerivative derivative(const SystemState& s, const ControlInput& u,
                           const SystemParams& params,
                           const ExternalForces& ext = {});

// Classic RK4 with fixed inputs over dt, followed by normalize().
SystemState step_rk4(const SystemState& s, const ControlInput& u,
                     const SystemParams& params, double dt,
                     const ExternalForces& ext = {});

// Restore the manifold: unit rho, rho_dot tangent to it, unit quaternion,
// x_q recomputed from the cable constraint.
void normalize(SystemState& s, const SystemParams& params);

RotorWrench rotor_forward(const Eigen::Vector4d& n, const Eigen::Vector4d& n_dot,
                          const RotorGeometry& rotor);

// The 4x4 map [f; tau] = G1 * n.^2 (+ G2 * n_dot for the gyroscopic yaw term).
Eigen::Matrix4d rotor_g1(const RotorGeometry& rotor);
Eigen::Matrix4d rotor_g2(const RotorGeometry& rotor);

double hover_thrust(const SystemParams& params);
Eigen::Vector4d hover_rotor_speed(const SystemParams& params);

// Mechanical energy (kinetic + gravitational potential) of the two bodies,
// attitude spin included; used by the conservation checks.
double mechanical_energy(const SystemState& s, const SystemParams& params);

// JSON parameter file round trip (SI units, keys documented in README).
SystemParams load_params(const std::string& path);
void save_params(const SystemParams& params, const std::string& path);

}  // namespace slungload
