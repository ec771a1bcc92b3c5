#include "slungload/traj_opt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "slungload/flatness.hpp"

namespace slungload {

namespace {

double sq(double x) { return x * x; }

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

}  // namespace

ThrustTilt thrust_and_tilt(const Eigen::Vector3d& acc,
                           const Eigen::Vector3d& jerk,
                           const Eigen::Vector3d& snap,
                           const SystemParams& params) {
  const Eigen::Vector3d w = acc + Eigen::Vector3d(0, 0, params.g);
  if (w.norm() <= kTautEps)
    throw std::domain_error("thrust_and_tilt: cable slack");
  const UnitChain ch = unit_chain(w, jerk, snap);
  const double mt = params.total_mass();
  const double arm = params.m_q * params.l;  // scales the swing correction
  const Eigen::Vector3d force = mt * w + arm * ch.udd;
  ThrustTilt out;
  out.f = force.norm();
  if (out.f < 1e-9)
    throw std::domain_error("thrust_and_tilt: vanishing thrust");
  const Eigen::Vector3d zb = force / out.f;
  out.cos_tilt = zb.z();

  // Two adjoint passes through the unit chain, one per output.
  Eigen::Vector3d gw = mt * zb, gwd = Eigen::Vector3d::Zero(),
                  gwdd = Eigen::Vector3d::Zero();
  unit_chain_backward(ch, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                      arm * zb, gw, gwd, gwdd);
  out.df_da = gw;
  out.df_dj = gwd;
  out.df_ds = gwdd;

  const Eigen::Vector3d dct_df =
      (Eigen::Vector3d::UnitZ() - out.cos_tilt * zb) / out.f;
  gw = mt * dct_df;
  gwd.setZero();
  gwdd.setZero();
  unit_chain_backward(ch, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(),
                      arm * dct_df, gw, gwd, gwdd);
  out.dct_da = gw;
  out.dct_dj = gwd;
  out.dct_ds = gwdd;
  return out;
}

double penalty_eval(const PiecewisePoly& poly, const EsdfMap* map,
                    const DynamicLimits& lim, const PlannerWeights& w,
                    const SystemParams& params, int n_bubbles,
                    Eigen::MatrixX3d& grad_c, Eigen::VectorXd& grad_t) {
  const int m = poly.pieces();
  grad_c.setZero(8 * m, 3);
  grad_t.setZero(m);
  double total = 0.0;

  const double mt = params.total_mass();
  const double arm = params.m_q * params.l;
  const double v_lim2 = sq(w.vel_margin * lim.v_max);
  const double a_lim2 = sq(w.acc_margin * lim.a_max);
  const double f_center = 0.5 * (lim.f_max + lim.f_min);
  const double f_radius2 = sq(w.thrust_margin * 0.5 * (lim.f_max - lim.f_min));
  const double ct_lim = std::cos(lim.theta_max - w.tilt_margin);

  for (int i = 0; i < m; ++i) {
    const double ti = poly.durations(i);
    const double step = ti / w.kappa;
    for (int j = 0; j <= w.kappa; ++j) {
      const double node = (j == 0 || j == w.kappa) ? 0.5 : 1.0;
      const double tl = step * j;
      Eigen::Vector3d d[6];
      for (int o = 0; o < 6; ++o) d[o] = poly.piece_eval(i, tl, o);

      double pena = 0.0;
      Eigen::Vector3d gp = Eigen::Vector3d::Zero(), gv = gp, ga = gp, gj = gp,
                      gs = gp;

      {
        const double viol = d[1].squaredNorm() - v_lim2;
        const SmoothL1 sl = smooth_l1(viol, w.smooth_mu);
        if (sl.value > 0.0) {
          pena += w.vel * sl.value;
          gv += (w.vel * sl.derivative * 2.0) * d[1];
        }
      }
      {
        const double viol = d[2].squaredNorm() - a_lim2;
        const SmoothL1 sl = smooth_l1(viol, w.smooth_mu);
        if (sl.value > 0.0) {
          pena += w.acc * sl.value;
          ga += (w.acc * sl.derivative * 2.0) * d[2];
        }
      }

      const Eigen::Vector3d wvec = d[2] + Eigen::Vector3d(0, 0, params.g);
      {
        // Keep a_z + g away from zero; this is also what rescues the solver
        // from the singular branch below, since its gradient raises a_z.
        const double viol = lim.eps_tension - wvec.z();
        const SmoothL1 sl = smooth_l1(viol, w.smooth_mu);
        if (sl.value > 0.0) {
          pena += w.tension * sl.value;
          ga.z() -= w.tension * sl.derivative;
        }
      }

      const double n = wvec.norm();
      if (n <= kTautEps) {
        pena += w.singular;
      } else {
        const UnitChain ch = unit_chain(wvec, d[3], d[4]);
        const Eigen::Vector3d force = mt * wvec + arm * ch.udd;
        const double f = force.norm();
        Eigen::Vector3d g_force = Eigen::Vector3d::Zero();
        if (f < 1e-9) {
          pena += w.singular;
        } else {
          const Eigen::Vector3d zb = force / f;
          {
            const double viol = sq(f - f_center) - f_radius2;
            const SmoothL1 sl = smooth_l1(viol, w.smooth_mu);
            if (sl.value > 0.0) {
              pena += w.thrust * sl.value;
              g_force += (w.thrust * sl.derivative * 2.0 * (f - f_center)) * zb;
            }
          }
          {
            const double ct = zb.z();
            const double viol = ct_lim - ct;
            const SmoothL1 sl = smooth_l1(viol, w.smooth_mu);
            if (sl.value > 0.0) {
              pena += w.tilt * sl.value;
              g_force -= (w.tilt * sl.derivative / f) *
                         (Eigen::Vector3d::UnitZ() - ct * zb);
            }
          }
        }

        Eigen::Vector3d gu = Eigen::Vector3d::Zero();
        if (map != nullptr) {
          for (int b = 0; b <= n_bubbles; ++b) {
            const double frac = static_cast<double>(b) / n_bubbles;
            const Eigen::Vector3d c = d[0] + frac * params.l * ch.u;
            const double radius =
                (b == n_bubbles ? lim.d_q : lim.d_l) + w.clearance_margin;
            const EsdfQuery q = map->query(c);
            const double viol = radius - q.distance;
            if (viol > 0.0) {
              pena += w.collision * viol * viol * viol / n_bubbles;
              const Eigen::Vector3d gc =
                  (-w.collision * 3.0 * viol * viol / n_bubbles) * q.gradient;
              gp += gc;
              gu += (frac * params.l) * gc;
            }
          }
        }

        Eigen::Vector3d gw = mt * g_force, gwd = Eigen::Vector3d::Zero(),
                        gwdd = Eigen::Vector3d::Zero();
        unit_chain_backward(ch, gu, Eigen::Vector3d::Zero(), arm * g_force, gw,
                            gwd, gwdd);
        ga += gw;
        gj += gwd;
        gs += gwdd;
      }

      if (pena == 0.0) continue;
      total += node * step * pena;

      const Eigen::Matrix<double, 8, 1> b0 = poly_basis(tl, 0),
                                        b1 = poly_basis(tl, 1),
                                        b2 = poly_basis(tl, 2),
                                        b3 = poly_basis(tl, 3),
                                        b4 = poly_basis(tl, 4);
      grad_c.block<8, 3>(8 * i, 0) +=
          (node * step) *
          (b0 * gp.transpose() + b1 * gv.transpose() + b2 * ga.transpose() +
           b3 * gj.transpose() + b4 * gs.transpose());
      const double dpena_dt = gp.dot(d[1]) + gv.dot(d[2]) + ga.dot(d[3]) +
                              gj.dot(d[4]) + gs.dot(d[5]);
      grad_t(i) += node * (dpena_dt * (static_cast<double>(j) / w.kappa) * step +
                           pena / w.kappa);
    }
  }
  return total;
}

ConstraintAudit audit_trajectory(const PiecewisePoly& poly, const EsdfMap* map,
                                 const DynamicLimits& lim,
                                 const SystemParams& params, int n_bubbles,
                                 double dt) {
  ConstraintAudit a;
  a.min_thrust = std::numeric_limits<double>::infinity();
  a.min_tension_accel = std::numeric_limits<double>::infinity();
  a.min_tension = std::numeric_limits<double>::infinity();
  a.min_clearance = std::numeric_limits<double>::infinity();
  a.map_checked = map != nullptr;

  const double total = poly.total_time();
  const int steps = std::max(1, static_cast<int>(std::ceil(total / dt)));
  for (int k = 0; k <= steps; ++k) {
    const double t = total * k / steps;
    const Eigen::Vector3d p = poly.evaluate(t, 0);
    const Eigen::Vector3d v = poly.evaluate(t, 1);
    const Eigen::Vector3d acc = poly.evaluate(t, 2);
    a.max_vel = std::max(a.max_vel, v.norm());
    a.max_acc = std::max(a.max_acc, acc.norm());
    const Eigen::Vector3d wv = acc + Eigen::Vector3d(0, 0, params.g);
    a.min_tension_accel = std::min(a.min_tension_accel, wv.z());
    a.min_tension = std::min(a.min_tension, params.m_l * wv.norm());
    if (wv.norm() <= kTautEps) continue;  // flat map unavailable here
    const ThrustTilt tt =
        thrust_and_tilt(acc, poly.evaluate(t, 3), poly.evaluate(t, 4), params);
    a.min_thrust = std::min(a.min_thrust, tt.f);
    a.max_thrust = std::max(a.max_thrust, tt.f);
    a.max_tilt = std::max(
        a.max_tilt, std::acos(std::clamp(tt.cos_tilt, -1.0, 1.0)));
    if (map != nullptr) {
      const Eigen::Vector3d u = wv.normalized();  // points payload -> quadrotor
      for (int b = 0; b <= n_bubbles; ++b) {
        const double frac = static_cast<double>(b) / n_bubbles;
        const Eigen::Vector3d c = p + frac * params.l * u;
        const double radius = b == n_bubbles ? lim.d_q : lim.d_l;
        a.min_clearance =
            std::min(a.min_clearance, map->query(c).distance - radius);
      }
    }
  }
  return a;
}

double ConstraintAudit::worst_violation(const DynamicLimits& lim) const {
  double v = 0.0;
  v = std::max(v, max_vel - lim.v_max);
  v = std::max(v, max_acc - lim.a_max);
  v = std::max(v, lim.f_min - min_thrust);
  v = std::max(v, max_thrust - lim.f_max);
  v = std::max(v, max_tilt - lim.theta_max);
  v = std::max(v, lim.eps_tension - min_tension_accel);
  if (map_checked) v = std::max(v, -min_clearance);
  return v;
}

bool ConstraintAudit::feasible(const DynamicLimits& lim, double tol,
                               double clearance_slack) const {
  if (max_vel > lim.v_max + tol) return false;
  if (max_acc > lim.a_max + tol) return false;
  if (min_thrust < lim.f_min - tol) return false;
  if (max_thrust > lim.f_max + tol) return false;
  if (max_tilt > lim.theta_max + tol) return false;
  if (min_tension_accel < lim.eps_tension - tol) return false;
  if (map_checked && min_clearance < -clearance_slack) return false;
  return true;
}

std::string ConstraintAudit::to_json() const {
  nlohmann::json j;
  j["max_vel"] = max_vel;
  j["max_acc"] = max_acc;
  j["min_thrust"] = min_thrust;
  j["max_thrust"] = max_thrust;
  j["max_tilt_deg"] = max_tilt * 180.0 / M_PI;
  j["min_tension_accel"] = min_tension_accel;
  j["min_tension"] = min_tension;
  if (map_checked) j["min_clearance"] = min_clearance;
  return j.dump();
}

TrajOpt::TrajOpt(const EsdfMap* map, const SystemParams& params,
                 const PlannerConfig& cfg)
    : map_(map), params_(params), cfg_(cfg) {}

void TrajOpt::initialize(const BoundaryCond& head, const BoundaryCond& tail,
                         const Eigen::MatrixX3d& waypoints,
                         const Eigen::VectorXd& durations) {
  waypoints_ = waypoints;
  durations_ = durations;
  spline_.setup(head, tail, static_cast<int>(durations.size()));
  spline_.set_conditions(waypoints_, durations_);
}

void TrajOpt::initialize_from_path(const Eigen::Vector3d& start,
                                   const Eigen::Vector3d& goal,
                                   const KinoPath& path) {
  const double len = path.segments.empty() ? 0.0 : path.arc_length();
  const int m = std::max(cfg_.min_pieces,
                         static_cast<int>(std::ceil(len / cfg_.piece_len)));
  const double total =
      std::max(path.segments.empty() ? 0.0 : path.total_time(), 0.5);
  Eigen::MatrixX3d wps(m - 1, 3);
  for (int i = 1; i < m; ++i) {
    if (path.segments.empty()) {
      wps.row(i - 1) = start + (goal - start) * (static_cast<double>(i) / m);
    } else {
      Eigen::Vector3d x, v, acc;
      path.sample(total * i / m, x, v, acc);
      wps.row(i - 1) = x;
    }
  }
  initialize(BoundaryCond::rest(start), BoundaryCond::rest(goal), wps,
             Eigen::VectorXd::Constant(m, total / m));
}

Eigen::VectorXd TrajOpt::pack() const {
  const int m = static_cast<int>(durations_.size());
  Eigen::VectorXd xi(m + 3 * (m - 1));
  for (int i = 0; i < m; ++i) xi(i) = duration_to_virtual(durations_(i));
  for (int i = 0; i + 1 < m; ++i)
    xi.segment<3>(m + 3 * i) = waypoints_.row(i).transpose();
  return xi;
}

void TrajOpt::unpack(const Eigen::VectorXd& xi) {
  const int m = static_cast<int>(durations_.size());
  for (int i = 0; i < m; ++i) durations_(i) = virtual_to_duration(xi(i));
  for (int i = 0; i + 1 < m; ++i)
    waypoints_.row(i) = xi.segment<3>(m + 3 * i).transpose();
}

double TrajOpt::objective(const Eigen::VectorXd& xi, Eigen::VectorXd& grad) {
  const int m = static_cast<int>(durations_.size());
  unpack(xi);

  // A piece collapsing toward zero duration makes the spline system singular
  // before the energy term can object. Turn back with a smooth barrier
  // instead of factorizing a near-singular matrix.
  constexpr double kFloor = 1e-3;
  if (durations_.minCoeff() < kFloor) {
    grad = Eigen::VectorXd::Zero(xi.size());
    double cost = 1e9;
    for (int i = 0; i < m; ++i) {
      if (durations_(i) < kFloor) {
        const double gap = kFloor - durations_(i);
        cost += 1e9 * gap * gap;
        grad(i) = -2e9 * gap * virtual_to_duration_jacobian(xi(i));
      }
    }
    return cost;
  }
  spline_.set_conditions(waypoints_, durations_);

  Eigen::MatrixX3d gd_c;
  Eigen::VectorXd gd_t;
  spline_.energy_grads(Eigen::Vector3d::Ones(), gd_c, gd_t);
  double cost = spline_.energy();

  Eigen::MatrixX3d pen_c;
  Eigen::VectorXd pen_t;
  const double s = penalty_eval(spline_.poly(), map_, cfg_.limits, cfg_.weights,
                                params_, cfg_.n_bubbles, pen_c, pen_t);
  cost += cfg_.weights.scale * s;
  cost += cfg_.weights.time * durations_.sum();
  gd_c += cfg_.weights.scale * pen_c;
  gd_t += cfg_.weights.scale * pen_t;
  gd_t.array() += cfg_.weights.time;

  Eigen::MatrixX3d dl_dp;
  Eigen::VectorXd dl_dt;
  spline_.propagate_gradients(gd_c, gd_t, dl_dp, dl_dt);

  grad.resize(xi.size());
  for (int i = 0; i < m; ++i)
    grad(i) = dl_dt(i) * virtual_to_duration_jacobian(xi(i));
  for (int i = 0; i + 1 < m; ++i)
    grad.segment<3>(m + 3 * i) = dl_dp.row(i).transpose();
  return cost;
}

LbfgsResult TrajOpt::optimize() {
  const auto fn = [this](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return objective(x, g);
  };
  LbfgsResult res = lbfgs_minimize(fn, pack(), cfg_.lbfgs);
  unpack(res.x);
  spline_.set_conditions(waypoints_, durations_);
  return res;
}

std::string PlanResult::report_json() const {
  nlohmann::json j = nlohmann::json::parse(audit.to_json());
  j["feasible"] = success;
  j["cost"] = cost;
  j["iterations"] = iterations;
  j["evaluations"] = evaluations;
  j["search_ms"] = search_ms;
  j["optimize_ms"] = optimize_ms;
  j["total_time"] = poly.total_time();
  j["pieces"] = poly.pieces();
  if (!failure_reason.empty()) j["failure_reason"] = failure_reason;
  return j.dump(2);
}

PlanResult plan_trajectory(const EsdfMap& map, const SystemParams& params,
                           const PlannerConfig& cfg,
                           const Eigen::Vector3d& start,
                           const Eigen::Vector3d& goal) {
  PlanResult out;

  if ((goal - start).norm() < 1e-6) {
    // Degenerate request: hold position with a constant single piece.
    MincoSpline spline;
    spline.setup(BoundaryCond::rest(start), BoundaryCond::rest(goal), 1);
    spline.set_conditions(Eigen::MatrixX3d(0, 3),
                          Eigen::VectorXd::Constant(1, 1.0));
    out.poly = spline.poly();
    out.audit = audit_trajectory(out.poly, &map, cfg.limits, params,
                                 cfg.n_bubbles, cfg.audit_dt);
    out.success = out.audit.feasible(cfg.limits, 1e-3, map.resolution());
    if (!out.success) out.failure_reason = "hold point infeasible";
    return out;
  }

  SearchConfig search = cfg.search;
  search.v_max = cfg.limits.v_max;
  search.a_max = cfg.limits.a_max;
  search.d_l = cfg.limits.d_l;
  search.d_q = cfg.limits.d_q;
  search.n_bubbles = cfg.n_bubbles;

  const double t0 = now_ms();
  const SearchResult sr =
      kino_search(map, params, start, Eigen::Vector3d::Zero(), goal, search);
  out.search_ms = now_ms() - t0;
  if (!sr.success) {
    out.failure_reason = "search: " + sr.failure_reason;
    return out;
  }

  TrajOpt opt(&map, params, cfg);
  opt.initialize_from_path(start, goal, sr.path);
  const double t1 = now_ms();
  const LbfgsResult lr = opt.optimize();
  out.optimize_ms = now_ms() - t1;

  out.poly = opt.poly();
  out.cost = lr.value;
  out.iterations = lr.iterations;
  out.evaluations = lr.evaluations;
  out.audit = audit_trajectory(out.poly, &map, cfg.limits, params,
                               cfg.n_bubbles, cfg.audit_dt);
  out.success = out.audit.feasible(cfg.limits, 1e-3, map.resolution());
  if (!out.success) out.failure_reason = "constraint audit failed";
  return out;
}

}  // namespace slungload
