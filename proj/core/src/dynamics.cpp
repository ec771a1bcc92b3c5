#include "slungload/dynamics.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace slungload {

SystemState SystemState::hover(const Eigen::Vector3d& payload_pos,
                               const SystemParams& params) {
  SystemState s;
  s.x_l = payload_pos;
  s.rho = -Eigen::Vector3d::UnitZ();
  s.x_q = payload_pos - params.l * s.rho;
  return s;
}

double cable_tension(const SystemState& s, double thrust,
                     const SystemParams& params, const ExternalForces& ext) {
  const Eigen::Vector3d f_vec = thrust * (s.q * Eigen::Vector3d::UnitZ());
  const double mu = params.m_q * params.m_l / params.total_mass();
  return mu * (params.l * s.rho_dot.squaredNorm() -
               s.rho.dot(f_vec + ext.f_q) / params.m_q +
               s.rho.dot(ext.f_l) / params.m_l);
}

StateDerivative derivative(const SystemState& s, const ControlInput& u,
                           const SystemParams& params,
                           const ExternalForces& ext) {
  const Eigen::Vector3d g_vec(0.0, 0.0, params.g);
  const Eigen::Vector3d f_vec = u.f * (s.q * Eigen::Vector3d::UnitZ());

  StateDerivative d;
  d.tension = cable_tension(s, u.f, params, ext);

  d.x_q_dot = s.v_q;
  d.x_l_dot = s.v_l;
  d.v_q_dot = (d.tension * s.rho + f_vec + ext.f_q) / params.m_q - g_vec;
  d.v_l_dot = (-d.tension * s.rho + ext.f_l) / params.m_l - g_vec;

  d.rho_dot = s.rho_dot;
  const Eigen::Vector3d gap = (f_vec + ext.f_q) / (params.m_q * params.l) -
                              ext.f_l / (params.m_l * params.l);
  d.rho_ddot = s.rho.cross(s.rho.cross(gap)) - s.rho_dot.squaredNorm() * s.rho;

  // qdot = 0.5 q (x) (0, omega), body rates.
  const Eigen::Quaterniond wq(0.0, u.omega.x(), u.omega.y(), u.omega.z());
  const Eigen::Quaterniond qd = s.q * wq;
  d.q_dot = 0.5 * Eigen::Vector4d(qd.w(), qd.x(), qd.y(), qd.z());
  return d;
}

namespace {

struct PackedState {
  // x_q v_q x_l v_l rho rho_dot (18) + quaternion (4)
  Eigen::Matrix<double, 22, 1> y;
};

PackedState pack(const SystemState& s) {
  PackedState p;
  p.y.segment<3>(0) = s.x_q;
  p.y.segment<3>(3) = s.v_q;
  p.y.segment<3>(6) = s.x_l;
  p.y.segment<3>(9) = s.v_l;
  p.y.segment<3>(12) = s.rho;
  p.y.segment<3>(15) = s.rho_dot;
  p.y(18) = s.q.w();
  p.y(19) = s.q.x();
  p.y(20) = s.q.y();
  p.y(21) = s.q.z();
  return p;
}

SystemState unpack(const PackedState& p, const Eigen::Vector3d& omega) {
  SystemState s;
  s.x_q = p.y.segment<3>(0);
  s.v_q = p.y.segment<3>(3);
  s.x_l = p.y.segment<3>(6);
  s.v_l = p.y.segment<3>(9);
  s.rho = p.y.segment<3>(12);
  s.rho_dot = p.y.segment<3>(15);
  s.q = Eigen::Quaterniond(p.y(18), p.y(19), p.y(20), p.y(21));
  s.omega = omega;
  return s;
}

Eigen::Matrix<double, 22, 1> rhs(const SystemState& s, const ControlInput& u,
                                 const SystemParams& params,
                                 const ExternalForces& ext) {
  const StateDerivative d = derivative(s, u, params, ext);
  Eigen::Matrix<double, 22, 1> dy;
  dy.segment<3>(0) = d.x_q_dot;
  dy.segment<3>(3) = d.v_q_dot;
  dy.segment<3>(6) = d.x_l_dot;
  dy.segment<3>(9) = d.v_l_dot;
  dy.segment<3>(12) = d.rho_dot;
  dy.segment<3>(15) = d.rho_ddot;
  dy.segment<4>(18) = d.q_dot;
  return dy;
}

}  // namespace

SystemState step_rk4(const SystemState& s, const ControlInput& u,
                     const SystemParams& params, double dt,
                     const ExternalForces& ext) {
  const PackedState y0 = pack(s);
  const auto eval = [&](const Eigen::Matrix<double, 22, 1>& y) {
    PackedState p;
    p.y = y;
    return rhs(unpack(p, u.omega), u, params, ext);
  };
  const auto k1 = eval(y0.y);
  const auto k2 = eval(y0.y + 0.5 * dt * k1);
  const auto k3 = eval(y0.y + 0.5 * dt * k2);
  const auto k4 = eval(y0.y + dt * k3);
  PackedState y1;
  y1.y = y0.y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  SystemState out = unpack(y1, u.omega);
  normalize(out, params);
  return out;
}

void normalize(SystemState& s, const SystemParams& params) {
  const double n = s.rho.norm();
  if (n > 1e-12) s.rho /= n;
  s.rho_dot -= s.rho.dot(s.rho_dot) * s.rho;
  s.q.normalize();
  s.x_q = s.x_l - params.l * s.rho;
}

Eigen::Matrix4d rotor_g1(const RotorGeometry& r) {
  Eigen::Matrix4d g1;
  const double kf = r.k_f, km = r.k_m, ax = r.ax(), ay = r.ay();
  g1 << kf, kf, kf, kf,
        ay * kf, -ay * kf, -ay * kf, ay * kf,
        -ax * kf, -ax * kf, ax * kf, ax * kf,
        -km, km, -km, km;
  return g1;
}

Eigen::Matrix4d rotor_g2(const RotorGeometry& r) {
  Eigen::Matrix4d g2 = Eigen::Matrix4d::Zero();
  g2.row(3) << r.i_p, -r.i_p, r.i_p, -r.i_p;
  return g2;
}

RotorWrench rotor_forward(const Eigen::Vector4d& n, const Eigen::Vector4d& n_dot,
                          const RotorGeometry& rotor) {
  const Eigen::Vector4d w =
      rotor_g1(rotor) * n.cwiseProduct(n) + rotor_g2(rotor) * n_dot;
  RotorWrench out;
  out.f = w(0);
  out.tau = w.tail<3>();
  return out;
}

double hover_thrust(const SystemParams& params) {
  return params.total_mass() * params.g;
}

Eigen::Vector4d hover_rotor_speed(const SystemParams& params) {
  const double per_rotor = hover_thrust(params) / 4.0;
  return Eigen::Vector4d::Constant(std::sqrt(per_rotor / params.rotor.k_f));
}

double mechanical_energy(const SystemState& s, const SystemParams& params) {
  const Eigen::Vector3d j = params.inertia;
  return 0.5 * params.m_q * s.v_q.squaredNorm() +
         0.5 * params.m_l * s.v_l.squaredNorm() +
         0.5 * s.omega.dot(j.asDiagonal() * s.omega) +
         params.g * (params.m_q * s.x_q.z() + params.m_l * s.x_l.z());
}

SystemParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open parameter file: " + path);
  nlohmann::json j;
  in >> j;
  SystemParams p;
  p.m_q = j.value("m_q", p.m_q);
  p.m_l = j.value("m_l", p.m_l);
  p.l = j.value("cable_length", p.l);
  p.g = j.value("g", p.g);
  if (j.contains("inertia")) {
    const auto& v = j["inertia"];
    p.inertia = Eigen::Vector3d(v.at(0), v.at(1), v.at(2));
  }
  auto& r = p.rotor;
  r.k_f = j.value("k_f", r.k_f);
  r.k_m = j.value("k_m", r.k_m);
  r.arm = j.value("arm", r.arm);
  if (j.contains("beta_deg")) r.beta = j["beta_deg"].get<double>() * M_PI / 180.0;
  r.i_p = j.value("i_p", r.i_p);
  r.motor_tau = j.value("motor_tau", r.motor_tau);
  r.n_max = j.value("n_max", r.n_max);
  if (p.m_q <= 0.0 || p.m_l <= 0.0 || p.l <= 0.0)
    throw std::runtime_error("parameter file has nonpositive mass or length");
  return p;
}

void save_params(const SystemParams& p, const std::string& path) {
  nlohmann::json j;
  j["m_q"] = p.m_q;
  j["m_l"] = p.m_l;
  j["cable_length"] = p.l;
  j["g"] = p.g;
  j["inertia"] = {p.inertia.x(), p.inertia.y(), p.inertia.z()};
  j["k_f"] = p.rotor.k_f;
  j["k_m"] = p.rotor.k_m;
  j["arm"] = p.rotor.arm;
  j["beta_deg"] = p.rotor.beta * 180.0 / M_PI;
  j["i_p"] = p.rotor.i_p;
  j["motor_tau"] = p.rotor.motor_tau;
  j["n_max"] = p.rotor.n_max;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write parameter file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace slungload
