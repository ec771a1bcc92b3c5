#include "slungload/flatness.hpp"

#include <stdexcept>

namespace slungload {

UnitChain unit_chain(const Eigen::Vector3d& w, const Eigen::Vector3d& wd,
                     const Eigen::Vector3d& wdd) {
  UnitChain c;
  c.w = w;
  c.wd = wd;
  c.wdd = wdd;
  c.n = w.norm();
  c.u = w / c.n;
  c.nd = w.dot(wd) / c.n;
  c.ud = (wd - c.nd * c.u) / c.n;
  c.ndd = (wd.squaredNorm() + w.dot(wdd) - c.nd * c.nd) / c.n;
  c.udd = (wdd - c.ndd * c.u - 2.0 * c.nd * c.ud) / c.n;
  return c;
}

Eigen::Vector3d unit_chain_third(const UnitChain& c, const Eigen::Vector3d& w3) {
  // n''' and u''' from w = n*u expanded to third order.
  const double n3 =
      (3.0 * c.wd.dot(c.wdd) + c.w.dot(w3) - 3.0 * c.nd * c.ndd) / c.n;
  return (w3 - n3 * c.u - 3.0 * c.ndd * c.ud - 3.0 * c.nd * c.udd) / c.n;
}

void unit_chain_backward(const UnitChain& c, const Eigen::Vector3d& gu_in,
                         const Eigen::Vector3d& gud_in,
                         const Eigen::Vector3d& gudd,
                         Eigen::Vector3d& gw, Eigen::Vector3d& gwd,
                         Eigen::Vector3d& gwdd) {
  Eigen::Vector3d gu = gu_in, gud = gud_in;
  double gn = 0.0, gnd = 0.0, gndd = 0.0;
  // Reverse through the forward assignments, last to first.
  // udd = (wdd - ndd u - 2 nd ud)/n
  gwdd += gudd / c.n;
  gndd += -c.u.dot(gudd) / c.n;
  gu += -(c.ndd / c.n) * gudd;
  gnd += -2.0 * c.ud.dot(gudd) / c.n;
  gud += -(2.0 * c.nd / c.n) * gudd;
  gn += -c.udd.dot(gudd) / c.n;
  // ndd = (|wd|^2 + w.wdd - nd^2)/n
  gwd += (2.0 * gndd / c.n) * c.wd;
  gw += (gndd / c.n) * c.wdd;
  gwdd += (gndd / c.n) * c.w;
  gnd += -(2.0 * c.nd / c.n) * gndd;
  gn += -(c.ndd / c.n) * gndd;
  // ud = (wd - nd u)/n
  gwd += gud / c.n;
  gnd += -c.u.dot(gud) / c.n;
  gu += -(c.nd / c.n) * gud;
  gn += -c.ud.dot(gud) / c.n;
  // nd = (w.wd)/n
  gw += (gnd / c.n) * c.wd;
  gwd += (gnd / c.n) * c.w;
  gn += -(c.nd / c.n) * gnd;
  // u = w/n
  gw += gu / c.n;
  gn += -c.u.dot(gu) / c.n;
  // n = |w|
  gw += gn * c.u;
}

FlatState flat_to_state(const FlatSnapshot& snap, const SystemParams& params) {
  const Eigen::Vector3d g_vec(0.0, 0.0, params.g);
  const Eigen::Vector3d w = snap.derivs[2] + g_vec;
  if (w.norm() <= kTautEps)
    throw std::domain_error("flatness singularity: cable not taut");

  const UnitChain c = unit_chain(w, snap.derivs[3], snap.derivs[4]);
  const Eigen::Vector3d u3 = unit_chain_third(c, snap.derivs[5]);

  FlatState out;
  SystemState& s = out.state;
  s.x_l = snap.derivs[0];
  s.v_l = snap.derivs[1];
  s.rho = -c.u;
  s.rho_dot = -c.ud;
  out.rho_ddot = -c.udd;
  s.x_q = s.x_l - params.l * s.rho;
  s.v_q = s.v_l - params.l * s.rho_dot;
  out.t_cable = params.m_l * c.n;

  // Thrust vector and its rate: f R e_z = (m_Q+m_L) w - m_Q l rho_ddot.
  const double m_t = params.total_mass();
  const Eigen::Vector3d f_vec = m_t * w + params.m_q * params.l * c.udd;
  const Eigen::Vector3d f_vec_dot =
      m_t * snap.derivs[3] + params.m_q * params.l * u3;
  out.f = f_vec.norm();
  if (out.f <= 1e-9)
    throw std::domain_error("flatness singularity: vanishing thrust");

  const Eigen::Vector3d zb = f_vec / out.f;
  const Eigen::Vector3d zb_dot =
      (f_vec_dot - zb.dot(f_vec_dot) * zb) / out.f;

  const Eigen::Vector3d xc(std::cos(snap.psi), std::sin(snap.psi), 0.0);
  const Eigen::Vector3d xc_dot =
      snap.psi_dot * Eigen::Vector3d(-std::sin(snap.psi), std::cos(snap.psi), 0.0);
  const Eigen::Vector3d ny = zb.cross(xc);
  const double ny_norm = ny.norm();
  if (ny_norm <= 1e-6)
    throw std::domain_error("flatness singularity: body-z parallel to yaw axis");
  const Eigen::Vector3d yb = ny / ny_norm;
  const Eigen::Vector3d ny_dot = zb_dot.cross(xc) + zb.cross(xc_dot);
  const Eigen::Vector3d yb_dot = (ny_dot - yb.dot(ny_dot) * yb) / ny_norm;
  const Eigen::Vector3d xb = yb.cross(zb);
  const Eigen::Vector3d xb_dot = yb_dot.cross(zb) + yb.cross(zb_dot);

  Eigen::Matrix3d r;
  r.col(0) = xb;
  r.col(1) = yb;
  r.col(2) = zb;
  s.q = Eigen::Quaterniond(r);
  s.q.normalize();

  out.omega = Eigen::Vector3d(-yb.dot(zb_dot), xb.dot(zb_dot), yb.dot(xb_dot));
  s.omega = out.omega;
  return out;
}

std::vector<Bubble> system_bubbles(const Eigen::Vector3d& x_l,
                                   const Eigen::Vector3d& a_l,
                                   const SystemParams& params, int n_bubbles,
                                   double d_l, double d_q) {
  const Eigen::Vector3d w = a_l + Eigen::Vector3d(0.0, 0.0, params.g);
  const double n = w.norm();
  if (n <= kTautEps)
    throw std::domain_error("flatness singularity: cable not taut");
  const Eigen::Vector3d rho = -w / n;
  std::vector<Bubble> out;
  out.reserve(n_bubbles + 1);
  for (int j = 0; j <= n_bubbles; ++j) {
    const double frac = static_cast<double>(j) / n_bubbles;
    out.push_back({x_l - frac * params.l * rho, j == n_bubbles ? d_q : d_l});
  }
  return out;
}

}  // namespace slungload
