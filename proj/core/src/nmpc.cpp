#include "slungload/nmpc.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "slungload/flatness.hpp"

namespace slungload {

namespace {

Eigen::Quaterniond quat_exp(const Eigen::Vector3d& v) {
  const double angle = v.norm();
  if (angle < 1e-12) return Eigen::Quaterniond(1.0, 0.5 * v.x(), 0.5 * v.y(), 0.5 * v.z()).normalized();
  const Eigen::Vector3d axis = v / angle;
  const double half = 0.5 * angle;
  const double s = std::sin(half);
  return Eigen::Quaterniond(std::cos(half), s * axis.x(), s * axis.y(),
                            s * axis.z());
}

Eigen::Vector3d quat_log(Eigen::Quaterniond q) {
  if (q.w() < 0.0) q.coeffs() *= -1.0;  // shortest arc
  const Eigen::Vector3d v = q.vec();
  const double n = v.norm();
  if (n < 1e-12) return 2.0 * v;
  return (2.0 * std::atan2(n, q.w()) / n) * v;
}

SystemState reduce_consistent(SystemState z, const SystemParams& params) {
  z.rho.normalize();
  z.rho_dot -= z.rho.dot(z.rho_dot) * z.rho;
  z.q.normalize();
  z.x_q = z.x_l - params.l * z.rho;
  z.v_q = z.v_l - params.l * z.rho_dot;
  return z;
}

// Shooting node: vehicle state plus the actuation state the lag model drags
// behind the commands. Tangent coordinates are 15 vehicle + 1 thrust + 3 rate.
struct Node {
  SystemState s;
  ActuatorState a;
};

constexpr int kNx = 19;

Node node_add(const Node& z, const Eigen::VectorXd& delta,
              const SystemParams& params) {
  Node out;
  out.s = state_add(z.s, delta.head<15>(), params);
  out.a.f = z.a.f + delta(15);
  out.a.omega = z.a.omega + delta.segment<3>(16);
  return out;
}

Eigen::VectorXd node_diff(const Node& a, const Node& b) {
  Eigen::VectorXd d(kNx);
  d.head<15>() = state_diff(a.s, b.s);
  d(15) = a.a.f - b.a.f;
  d.segment<3>(16) = a.a.omega - b.a.omega;
  return d;
}

// Advance every SystemState field by h times its derivative; the quaternion
// moves in ambient R^4, renormalized after the full step.
SystemState advance(const SystemState& s, const StateDerivative& d, double h) {
  SystemState r = s;
  r.x_q += h * d.x_q_dot;
  r.v_q += h * d.v_q_dot;
  r.x_l += h * d.x_l_dot;
  r.v_l += h * d.v_l_dot;
  r.rho += h * d.rho_dot;
  r.rho_dot += h * d.rho_ddot;
  const Eigen::Vector4d q =
      Eigen::Vector4d(s.q.w(), s.q.x(), s.q.y(), s.q.z()) + h * d.q_dot;
  r.q = Eigen::Quaterniond(q(0), q(1), q(2), q(3));
  return r;
}

// One RK4 stage over cfg.dt. The held command pulls the actuator state along
// the exact exponential relaxation, so each stage evaluates the dynamics with
// the thrust/body-rate the hardware would actually be producing then.
Node shoot(const Node& z, const ControlInput& cmd, const ExternalForces& ext,
           const NmpcConfig& cfg, const SystemParams& params) {
  const SystemState s0 = reduce_consistent(z.s, params);
  const double dt = cfg.dt;
  const auto act_at = [&](double d) {
    ControlInput u;
    u.f = cmd.f + (z.a.f - cmd.f) * std::exp(-d / cfg.tau_f);
    u.omega =
        cmd.omega + (z.a.omega - cmd.omega) * std::exp(-d / cfg.tau_omega);
    return u;
  };
  const ControlInput u0 = act_at(0.0);
  const ControlInput um = act_at(0.5 * dt);
  const ControlInput u1 = act_at(dt);
  const StateDerivative k1 = derivative(s0, u0, params, ext);
  const StateDerivative k2 = derivative(advance(s0, k1, 0.5 * dt), um, params, ext);
  const StateDerivative k3 = derivative(advance(s0, k2, 0.5 * dt), um, params, ext);
  const StateDerivative k4 = derivative(advance(s0, k3, dt), u1, params, ext);
  SystemState s = s0;
  for (const auto& [k, w] :
       {std::pair<const StateDerivative&, double>{k1, 1.0},
        {k2, 2.0},
        {k3, 2.0},
        {k4, 1.0}}) {
    s.x_q += (dt / 6.0) * w * k.x_q_dot;
    s.v_q += (dt / 6.0) * w * k.v_q_dot;
    s.x_l += (dt / 6.0) * w * k.x_l_dot;
    s.v_l += (dt / 6.0) * w * k.v_l_dot;
    s.rho += (dt / 6.0) * w * k.rho_dot;
    s.rho_dot += (dt / 6.0) * w * k.rho_ddot;
  }
  Eigen::Vector4d q(s0.q.w(), s0.q.x(), s0.q.y(), s0.q.z());
  q += (dt / 6.0) * (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot);
  s.q = Eigen::Quaterniond(q(0), q(1), q(2), q(3));
  Node out;
  out.s = reduce_consistent(s, params);
  out.a.f = u1.f;
  out.a.omega = u1.omega;
  return out;
}

}  // namespace

NmpcConfig NmpcConfig::make_default() {
  NmpcConfig cfg;
  cfg.q_diag.resize(21);
  cfg.q_diag << 40, 40, 40,   // quadrotor position
      60, 60, 60,             // payload position
      4, 4, 4,                // quadrotor velocity
      4, 4, 4,                // payload velocity
      20, 20, 20,             // cable direction
      4, 4, 4,                // cable rate
      10, 10, 10;             // attitude tangent
  cfg.qe_diag = 10.0 * cfg.q_diag;
  return cfg;
}

SystemState state_add(const SystemState& z, const Eigen::VectorXd& delta,
                      const SystemParams& params) {
  SystemState out = z;
  out.x_l += delta.segment<3>(0);
  out.v_l += delta.segment<3>(3);
  out.rho = (z.rho + delta.segment<3>(6)).normalized();
  out.rho_dot = z.rho_dot + delta.segment<3>(9);
  out.q = (z.q * quat_exp(delta.segment<3>(12))).normalized();
  return reduce_consistent(out, params);
}

Eigen::VectorXd state_diff(const SystemState& a, const SystemState& b) {
  Eigen::VectorXd d(15);
  d.segment<3>(0) = a.x_l - b.x_l;
  d.segment<3>(3) = a.v_l - b.v_l;
  d.segment<3>(6) = a.rho - b.rho;
  d.segment<3>(9) = a.rho_dot - b.rho_dot;
  d.segment<3>(12) = quat_log(b.q.conjugate() * a.q);
  return d;
}

Eigen::VectorXd tracking_residual(const SystemState& z, const SystemState& ref,
                                  const SystemParams& params) {
  Eigen::VectorXd r(21);
  const Eigen::Vector3d x_q = z.x_l - params.l * z.rho;
  const Eigen::Vector3d x_q_r = ref.x_l - params.l * ref.rho;
  const Eigen::Vector3d v_q = z.v_l - params.l * z.rho_dot;
  const Eigen::Vector3d v_q_r = ref.v_l - params.l * ref.rho_dot;
  r.segment<3>(0) = x_q - x_q_r;
  r.segment<3>(3) = z.x_l - ref.x_l;
  r.segment<3>(6) = v_q - v_q_r;
  r.segment<3>(9) = z.v_l - ref.v_l;
  // Direction error lives in the tangent plane at the reference; the radial
  // component is not an error, just curvature of the sphere.
  r.segment<3>(12) =
      (Eigen::Matrix3d::Identity() - ref.rho * ref.rho.transpose()) *
      (z.rho - ref.rho);
  r.segment<3>(15) = z.rho_dot - ref.rho_dot;
  r.segment<3>(18) = quat_log(ref.q.conjugate() * z.q);
  return r;
}

ReferenceWindow build_reference(const PiecewisePoly& poly, double t0,
                                const NmpcConfig& cfg,
                                const SystemParams& params) {
  ReferenceWindow win;
  const double total = poly.total_time();
  for (int k = 0; k <= cfg.horizon; ++k) {
    const double t = t0 + k * cfg.dt;
    FlatSnapshot snap;
    if (t >= total) {
      snap.derivs[0] = poly.evaluate(total, 0);
    } else {
      for (int o = 0; o < 6; ++o) snap.derivs[o] = poly.evaluate(t, o);
    }
    const FlatState fs = flat_to_state(snap, params);
    win.states.push_back(fs.state);
    if (k < cfg.horizon) win.inputs.push_back({fs.f, fs.omega});
  }
  return win;
}

std::vector<Eigen::VectorXd> decay_weights(const NmpcConfig& cfg) {
  std::vector<Eigen::VectorXd> out;
  for (int k = 0; k < cfg.horizon; ++k)
    out.push_back(std::exp(-k * cfg.b_x / cfg.horizon) * cfg.q_diag);
  out.push_back(cfg.qe_diag);
  return out;
}

void shift_warm_start(NmpcSolution& sol) {
  if (!sol.valid || sol.states.size() < 2) return;
  sol.states.erase(sol.states.begin());
  sol.states.push_back(sol.states.back());
  sol.act.erase(sol.act.begin());
  sol.act.push_back(sol.act.back());
  sol.inputs.erase(sol.inputs.begin());
  sol.inputs.push_back(sol.inputs.back());
}

ControlInput rti_step(const SystemState& x_now, const ActuatorState& act_now,
                      const ReferenceWindow& ref, const ExternalForces& ext,
                      const NmpcConfig& cfg, const SystemParams& params,
                      NmpcSolution& warm, NmpcDiagnostics* diag) {
  const int n = cfg.horizon;
  const int nx = kNx, nu = 4;

  if (!warm.valid || static_cast<int>(warm.states.size()) != n + 1 ||
      static_cast<int>(warm.act.size()) != n + 1 ||
      static_cast<int>(warm.inputs.size()) != n) {
    warm.states = ref.states;
    warm.inputs = ref.inputs;
    warm.act.clear();
    for (int k = 0; k < n; ++k)
      warm.act.push_back({ref.inputs[k].f, ref.inputs[k].omega});
    warm.act.push_back(warm.act.back());
    warm.valid = true;
  }

  std::vector<Node> z(n + 1);
  for (int k = 0; k <= n; ++k) z[k] = {warm.states[k], warm.act[k]};
  std::vector<ControlInput>& u = warm.inputs;
  z[0].s = reduce_consistent(x_now, params);
  z[0].a = act_now;

  const auto input_vec = [](const ControlInput& c) {
    return Eigen::Vector4d(c.f, c.omega.x(), c.omega.y(), c.omega.z());
  };
  const auto vec_input = [](const Eigen::Vector4d& v) {
    return ControlInput{v(0), v.segment<3>(1)};
  };

  // Linearize shooting maps and residuals about the warm-start trajectory.
  std::vector<Eigen::MatrixXd> a_mat(n), b_mat(n), qhat(n + 1);
  std::vector<Eigen::VectorXd> d_gap(n), qlin(n + 1);
  const double h = cfg.fd_h;
  double max_gap = 0.0, res_sq = 0.0;
  const std::vector<Eigen::VectorXd> qk = decay_weights(cfg);
  for (int k = 0; k < n; ++k) {
    const Node nominal_next = shoot(z[k], u[k], ext, cfg, params);
    d_gap[k] = node_diff(nominal_next, z[k + 1]);
    max_gap = std::max(max_gap, d_gap[k].norm());

    a_mat[k].resize(nx, nx);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(nx);
    for (int i = 0; i < nx; ++i) {
      delta(i) = h;
      const Node plus = shoot(node_add(z[k], delta, params), u[k], ext, cfg, params);
      delta(i) = -h;
      const Node minus = shoot(node_add(z[k], delta, params), u[k], ext, cfg, params);
      delta(i) = 0.0;
      a_mat[k].col(i) =
          (node_diff(plus, nominal_next) - node_diff(minus, nominal_next)) /
          (2.0 * h);
    }
    b_mat[k].resize(nx, nu);
    for (int i = 0; i < nu; ++i) {
      Eigen::Vector4d up = input_vec(u[k]), um = up;
      up(i) += h;
      um(i) -= h;
      const Node plus = shoot(z[k], vec_input(up), ext, cfg, params);
      const Node minus = shoot(z[k], vec_input(um), ext, cfg, params);
      b_mat[k].col(i) =
          (node_diff(plus, nominal_next) - node_diff(minus, nominal_next)) /
          (2.0 * h);
    }
  }
  for (int k = 0; k <= n; ++k) {
    const Eigen::VectorXd r = tracking_residual(z[k].s, ref.states[k], params);
    res_sq += r.squaredNorm();
    Eigen::MatrixXd jac(21, nx);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(nx);
    for (int i = 0; i < nx; ++i) {
      delta(i) = h;
      const Eigen::VectorXd rp = tracking_residual(
          node_add(z[k], delta, params).s, ref.states[k], params);
      delta(i) = -h;
      const Eigen::VectorXd rm = tracking_residual(
          node_add(z[k], delta, params).s, ref.states[k], params);
      delta(i) = 0.0;
      jac.col(i) = (rp - rm) / (2.0 * h);
    }
    qhat[k] = jac.transpose() * qk[k].asDiagonal() * jac;
    qlin[k] = jac.transpose() * (qk[k].asDiagonal() * r);
  }

  // Affine Riccati sweep; fixed components enter through the gap term so a
  // second pass can hold clamped inputs at their bounds.
  const auto sweep = [&](const std::vector<std::array<bool, 4>>& fixed,
                         const std::vector<Eigen::Vector4d>& fixed_val,
                         std::vector<Eigen::Vector4d>& du,
                         std::vector<Eigen::VectorXd>& dz) -> bool {
    std::vector<Eigen::MatrixXd> gain_k(n);
    std::vector<Eigen::VectorXd> gain_ff(n);
    std::vector<std::vector<int>> free_idx(n);
    Eigen::MatrixXd big_p = qhat[n];
    Eigen::VectorXd lin_p = qlin[n];
    for (int k = n - 1; k >= 0; --k) {
      std::vector<int>& fr = free_idx[k];
      for (int i = 0; i < nu; ++i)
        if (!fixed[k][i]) fr.push_back(i);
      Eigen::VectorXd d_eff = d_gap[k];
      for (int i = 0; i < nu; ++i)
        if (fixed[k][i]) d_eff += b_mat[k].col(i) * fixed_val[k](i);
      const int nf = static_cast<int>(fr.size());
      const double decay_u = std::exp(-k * cfg.b_u / n);
      Eigen::MatrixXd bf(nx, nf);
      Eigen::VectorXd rf(nf), hf(nf);
      const Eigen::Vector4d uv = input_vec(u[k]);
      const Eigen::Vector4d ur = input_vec(ref.inputs[k]);
      for (int i = 0; i < nf; ++i) {
        bf.col(i) = b_mat[k].col(fr[i]);
        hf(i) = decay_u * cfg.h_diag(fr[i]);
        rf(i) = hf(i) * (uv(fr[i]) - ur(fr[i]));
      }
      const Eigen::VectorXd pd = big_p * d_eff + lin_p;
      Eigen::MatrixXd quu = bf.transpose() * big_p * bf;
      quu.diagonal() += hf;
      const Eigen::MatrixXd qux = bf.transpose() * big_p * a_mat[k];
      const Eigen::VectorXd qu = rf + bf.transpose() * pd;
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(quu);
      if (ldlt.info() != Eigen::Success) return false;
      gain_k[k] = -ldlt.solve(qux);
      gain_ff[k] = -ldlt.solve(qu);
      const Eigen::MatrixXd new_p = qhat[k] +
                                    a_mat[k].transpose() * big_p * a_mat[k] +
                                    qux.transpose() * gain_k[k];
      lin_p = qlin[k] + a_mat[k].transpose() * pd +
              qux.transpose() * gain_ff[k];
      big_p = 0.5 * (new_p + new_p.transpose());
      if (!big_p.allFinite() || !lin_p.allFinite()) return false;
    }
    du.assign(n, Eigen::Vector4d::Zero());
    dz.assign(n + 1, Eigen::VectorXd::Zero(nx));
    for (int k = 0; k < n; ++k) {
      const Eigen::VectorXd duf = gain_k[k] * dz[k] + gain_ff[k];
      for (std::size_t i = 0; i < free_idx[k].size(); ++i)
        du[k](free_idx[k][i]) = duf(i);
      for (int i = 0; i < nu; ++i)
        if (fixed[k][i]) du[k](i) = fixed_val[k](i);
      dz[k + 1] = a_mat[k] * dz[k] + b_mat[k] * du[k] + d_gap[k];
    }
    return true;
  };

  std::vector<std::array<bool, 4>> fixed(n, {false, false, false, false});
  std::vector<Eigen::Vector4d> fixed_val(n, Eigen::Vector4d::Zero());
  std::vector<Eigen::Vector4d> du;
  std::vector<Eigen::VectorXd> dz;
  int clipped = 0;
  bool ok = sweep(fixed, fixed_val, du, dz);
  if (ok) {
    bool any = false;
    for (int k = 0; k < n; ++k) {
      const Eigen::Vector4d cand = input_vec(u[k]) + du[k];
      for (int i = 0; i < nu; ++i) {
        if (cand(i) < cfg.u_min(i) || cand(i) > cfg.u_max(i)) {
          fixed[k][i] = true;
          fixed_val[k](i) =
              std::clamp(cand(i), cfg.u_min(i), cfg.u_max(i)) -
              input_vec(u[k])(i);
          ++clipped;
          any = true;
        }
      }
    }
    if (any) ok = sweep(fixed, fixed_val, du, dz);
  }

  if (ok) {
    for (int k = 0; k < n; ++k) {
      Eigen::Vector4d v = input_vec(u[k]) + du[k];
      for (int i = 0; i < nu; ++i)
        v(i) = std::clamp(v(i), cfg.u_min(i), cfg.u_max(i));
      u[k] = vec_input(v);
      z[k + 1] = node_add(z[k + 1], dz[k + 1], params);
    }
  } else {
    // Keep the warm start; clamp defensively so the bound contract holds.
    for (int k = 0; k < n; ++k) {
      Eigen::Vector4d v = input_vec(u[k]);
      for (int i = 0; i < nu; ++i)
        v(i) = std::clamp(v(i), cfg.u_min(i), cfg.u_max(i));
      u[k] = vec_input(v);
    }
  }

  for (int k = 0; k <= n; ++k) {
    warm.states[k] = z[k].s;
    warm.act[k] = z[k].a;
  }

  if (diag != nullptr) {
    diag->gap_norm = max_gap;
    diag->residual_norm = std::sqrt(res_sq / (n + 1));
    diag->clipped = clipped;
    diag->degraded = !ok;
  }
  return u[0];
}

}  // namespace slungload
