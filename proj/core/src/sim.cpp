#include "slungload/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "slungload/flatness.hpp"
#include "slungload/force_estimator.hpp"
#include "slungload/indi.hpp"
#include "slungload/nmpc.hpp"

namespace slungload {

namespace {

constexpr double kAirDensity = 1.225;  // kg/m^3

Eigen::Vector4d quat_vec(const Eigen::Quaterniond& q) {
  return {q.w(), q.x(), q.y(), q.z()};
}

// Advance every SystemState field by h times its derivative; the quaternion
// moves in ambient R^4 (normalized once per full RK4 step, not per stage).
SystemState advance(const SystemState& s, const StateDerivative& d, double h) {
  SystemState r = s;
  r.x_q += h * d.x_q_dot;
  r.v_q += h * d.v_q_dot;
  r.x_l += h * d.x_l_dot;
  r.v_l += h * d.v_l_dot;
  r.rho += h * d.rho_dot;
  r.rho_dot += h * d.rho_ddot;
  const Eigen::Vector4d q = quat_vec(s.q) + h * d.q_dot;
  r.q = Eigen::Quaterniond(q(0), q(1), q(2), q(3));
  return r;
}

struct TruthDeriv {
  StateDerivative d;
  Eigen::Vector3d omega_dot;
  Eigen::Vector4d n_dot;
};

TruthDeriv truth_derivative(const TruthState& x, const Eigen::Vector4d& n_c,
                            const SystemParams& params,
                            const ExternalForces& ext,
                            const Eigen::Vector3d& torque_bias) {
  TruthDeriv out;
  out.n_dot = (n_c - x.n) / params.rotor.motor_tau;
  const RotorWrench w = rotor_forward(x.n, out.n_dot, params.rotor);
  // Translations + cable see only the collective thrust along R e_z; the
  // body-rate slot carries the state's own omega so q_dot is consistent.
  out.d = derivative(x.s, ControlInput{w.f, x.s.omega}, params, ext);
  const Eigen::Vector3d j_omega = params.inertia.cwiseProduct(x.s.omega);
  out.omega_dot = (w.tau + torque_bias - x.s.omega.cross(j_omega))
                      .cwiseQuotient(params.inertia);
  return out;
}

TruthState truth_advance(const TruthState& x, const TruthDeriv& k, double h) {
  TruthState r;
  r.s = advance(x.s, k.d, h);
  r.s.omega = x.s.omega + h * k.omega_dot;
  r.n = x.n + h * k.n_dot;
  return r;
}

}  // namespace

TruthState truth_hover(const Eigen::Vector3d& payload_pos,
                       const SystemParams& params) {
  TruthState x;
  x.s = SystemState::hover(payload_pos, params);
  x.n = hover_rotor_speed(params);
  return x;
}

double truth_step(TruthState& x, const Eigen::Vector4d& n_c,
                  const SystemParams& params, const ExternalForces& ext,
                  const Eigen::Vector3d& torque_bias, double dt) {
  const TruthDeriv k1 = truth_derivative(x, n_c, params, ext, torque_bias);
  const TruthDeriv k2 = truth_derivative(truth_advance(x, k1, 0.5 * dt), n_c,
                                         params, ext, torque_bias);
  const TruthDeriv k3 = truth_derivative(truth_advance(x, k2, 0.5 * dt), n_c,
                                         params, ext, torque_bias);
  const TruthDeriv k4 =
      truth_derivative(truth_advance(x, k3, dt), n_c, params, ext, torque_bias);

  TruthState next = x;
  const double h = dt / 6.0;
  for (const auto& [k, w] : {std::pair{&k1, 1.0}, {&k2, 2.0}, {&k3, 2.0},
                             {&k4, 1.0}}) {
    next.s.x_q += h * w * k->d.x_q_dot;
    next.s.v_q += h * w * k->d.v_q_dot;
    next.s.x_l += h * w * k->d.x_l_dot;
    next.s.v_l += h * w * k->d.v_l_dot;
    next.s.rho += h * w * k->d.rho_dot;
    next.s.rho_dot += h * w * k->d.rho_ddot;
    next.s.omega += h * w * k->omega_dot;
    next.n += h * w * k->n_dot;
  }
  Eigen::Vector4d q = quat_vec(x.s.q);
  q += h * (k1.d.q_dot + 2.0 * k2.d.q_dot + 2.0 * k3.d.q_dot + k4.d.q_dot);
  next.s.q = Eigen::Quaterniond(q(0), q(1), q(2), q(3));

  normalize(next.s, params);
  next.n = next.n.cwiseMax(0.0).cwiseMin(params.rotor.n_max);
  x = next;
  return k1.d.tension;
}

Eigen::Vector3d drag_force(const Eigen::Vector3d& v_body,
                           const Eigen::Vector3d& v_wind, double c_da) {
  const Eigen::Vector3d rel = v_wind - v_body;
  return 0.5 * kAirDensity * c_da * rel.norm() * rel;
}

RunMetrics compute_metrics(const std::vector<SimFrame>& frames,
                           const PiecewisePoly& traj,
                           const SystemParams& params) {
  RunMetrics m;
  m.frames = static_cast<int>(frames.size());
  if (frames.empty()) return m;
  double sum_l = 0.0, sum_q = 0.0;
  for (const SimFrame& fr : frames) {
    const double el = (fr.x_l - fr.ref_l).norm();
    sum_l += el * el;
    m.max_l_cm = std::max(m.max_l_cm, el);
    // Reference acceleration fixes the cable direction, which puts the
    // vehicle l along the normalized (a + g e_z) above the payload.
    Eigen::Vector3d w = traj.evaluate(fr.t, 2);
    w.z() += params.g;
    const double wn = w.norm();
    const Eigen::Vector3d ref_q =
        fr.ref_l + (wn > 1e-9 ? Eigen::Vector3d(params.l * w / wn)
                              : Eigen::Vector3d(0, 0, params.l));
    const double eq = (fr.x_q - ref_q).norm();
    sum_q += eq * eq;
    m.max_q_cm = std::max(m.max_q_cm, eq);
  }
  m.rmse_l_cm = 100.0 * std::sqrt(sum_l / frames.size());
  m.rmse_q_cm = 100.0 * std::sqrt(sum_q / frames.size());
  m.max_l_cm *= 100.0;
  m.max_q_cm *= 100.0;
  return m;
}

RunResult run_scenario(const Scenario& sc, const PiecewisePoly& traj) {
  RunResult out;
  const SystemParams& nom = sc.params;
  SystemParams truep = nom;

  NmpcConfig ncfg = NmpcConfig::make_default();
  // The predictor's body-rate lag has to match the loop that actually closes
  // the rate: the proportional rate loop alone responds with 1/k_omega, and
  // the incremental loop adds its measurement filter's group delay on top.
  // Predicting a faster response than the real one turns swing damping into
  // excitation at the pendulum frequency.
  ncfg.tau_omega = sc.use_indi ? 0.16 : 0.13;
  ForceEstimator est(nom);
  IndiConfig icfg;
  icfg.sample_hz = 1.0 / sc.sim_dt;
  IndiLoop indi(nom, icfg);

  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noisy = [&](const Eigen::Vector3d& v) {
    // Always draw, even with sigma = 0 or the estimate unused: the stream
    // must line up across ablation variants.
    Eigen::Vector3d n;
    for (int i = 0; i < 3; ++i) n(i) = gauss(rng);
    return Eigen::Vector3d(v + sc.acc_noise_sigma * n);
  };

  TruthState x = truth_hover(traj.evaluate(0.0, 0), nom);
  NmpcSolution warm;
  ControlInput u{hover_thrust(nom), Eigen::Vector3d::Zero()};
  Eigen::Vector4d n_c = x.n;
  ExternalForces est_ext;
  ExternalForces est_filt;
  ForceEstimate fe;
  // Disturbance smoothing between estimator and predictor: the window means
  // still jitter with the accelerometer noise, and feeding that straight into
  // the solver turns measurement noise into position dither.
  const double ctrl_dt = sc.control_every * sc.sim_dt;
  const double est_alpha = 1.0 - std::exp(-ctrl_dt / 0.6);
  constexpr double kEstNoiseFloorN = 0.05;

  double solve_sum = 0.0;
  double shift_debt = 0.0;
  int solve_count = 0;
  const int n_steps = static_cast<int>(std::lround(sc.duration / sc.sim_dt));
  out.frames.reserve(n_steps + 1);

  for (int k = 0; k <= n_steps; ++k) {
    const double t = k * sc.sim_dt;
    truep.m_l = nom.m_l;
    if (sc.attach.time >= 0.0 && t >= sc.attach.time) {
      const double ramp = std::max(sc.attach.ramp, 0.0);
      double frac = 1.0;
      if (ramp > 0.0 && t < sc.attach.time + ramp) {
        const double s = (t - sc.attach.time) / ramp;
        frac = s * s * (3.0 - 2.0 * s);  // smooth engagement
      }
      truep.m_l += frac * sc.attach.mass;
    }
    const Eigen::Vector3d v_wind = sc.wind.velocity(t);
    ExternalForces ext_true;
    ext_true.f_q = drag_force(x.s.v_q, v_wind, sc.c_da_q);
    ext_true.f_l = drag_force(x.s.v_l, v_wind, sc.c_da_l);
    const Eigen::Vector3d tau_bias =
        (t >= sc.torque_bias_start) ? sc.body_torque_bias
                                    : Eigen::Vector3d::Zero();

    if (k % sc.control_every == 0) {
      const Eigen::Vector4d n_dot = (n_c - x.n) / nom.rotor.motor_tau;
      const RotorWrench w = rotor_forward(x.n, n_dot, nom.rotor);
      const StateDerivative d =
          derivative(x.s, ControlInput{w.f, x.s.omega}, truep, ext_true);

      ForceMeasurement m;
      m.stamp = t;
      m.acc_q = noisy(d.v_q_dot);
      m.acc_l = noisy(d.v_l_dot);
      m.rho = x.s.rho;
      m.thrust_vec = w.f * (x.s.q * Eigen::Vector3d::UnitZ());
      est.push(m);
      fe = est.estimate();
      if (fe.stale) ++out.metrics.estimator_stale;
      // Only a force that holds still across the estimation window is worth
      // predicting forward: a payload weight or a steady wind fits every
      // sample, while model mismatch during a maneuver shows up as samples
      // that disagree with each other (the apparent force moves with the
      // acceleration). Predicting those forward hands the controller a
      // disturbance that is stale by half a window -- roughly anti-phase at
      // maneuver frequencies. Shrink the fed-back estimate by the sample
      // spread before smoothing.
      const auto spread = [](const std::vector<Eigen::Vector3d>& samples,
                             const Eigen::Vector3d& mean) {
        if (samples.empty()) return 0.0;
        double acc = 0.0;
        for (const auto& s : samples) acc += (s - mean).squaredNorm();
        return std::sqrt(acc / static_cast<double>(samples.size()));
      };
      const auto confidence = [](double sigma) {
        constexpr double s0 = 0.25;  // N; spread at which trust halves
        return s0 * s0 / (s0 * s0 + sigma * sigma);
      };
      const double gain_q = confidence(spread(fe.f_q_samples, fe.f_q));
      const double gain_l = confidence(spread(fe.f_l_samples, fe.f_l));
      est_filt.f_q += est_alpha * (gain_q * fe.f_q - est_filt.f_q);
      est_filt.f_l += est_alpha * (gain_l * fe.f_l - est_filt.f_l);
      // Even after smoothing, the estimate carries a slowly wandering
      // residual of a few hundredths of a newton. Feeding that back just
      // walks the equilibrium around (the lateral stiffness is a few N/m,
      // so 0.03 N is already half a centimetre). Components inside the
      // noise floor carry no information; shrink toward zero by the floor
      // so genuine disturbances pass through minus a constant bias.
      const auto shrink = [](const Eigen::Vector3d& v, double floor_n) {
        const double n = v.norm();
        return n <= floor_n ? Eigen::Vector3d::Zero().eval()
                            : (v * ((n - floor_n) / n)).eval();
      };
      if (sc.force_comp) {
        est_ext.f_q = shrink(est_filt.f_q, kEstNoiseFloorN);
        est_ext.f_l = shrink(est_filt.f_l, kEstNoiseFloorN);
      } else {
        est_ext = ExternalForces{};
      }

      const auto tic = std::chrono::steady_clock::now();
      const ReferenceWindow ref = build_reference(traj, t, ncfg, nom);
      const ActuatorState act{w.f, x.s.omega};
      NmpcDiagnostics diag;
      u = rti_step(x.s, act, ref, est_ext, ncfg, nom, warm, &diag);
      // The predictor grid is coarser than the control rate; realign the warm
      // start only when the window has slid past a full stage.
      shift_debt += sc.control_every * sc.sim_dt;
      while (shift_debt >= ncfg.dt - 1e-12) {
        shift_warm_start(warm);
        shift_debt -= ncfg.dt;
      }
      const double ms =
          std::chrono::duration<double, std::milli>(
              std::chrono::steady_clock::now() - tic)
              .count();
      solve_sum += ms;
      ++solve_count;
      out.metrics.max_solve_ms = std::max(out.metrics.max_solve_ms, ms);
      if (diag.degraded) ++out.metrics.nmpc_degraded;
    }

    if (sc.use_indi) {
      n_c = indi.step(u.f, u.omega, x.s.omega, x.n);
    } else {
      // Computed-torque baseline at the same rate: cancel the gyroscopic
      // term, close the rate loop with the same gains, no filtering and no
      // incremental term.
      const Eigen::Vector3d j_omega = nom.inertia.cwiseProduct(x.s.omega);
      const Eigen::Vector3d tau_c =
          x.s.omega.cross(j_omega) +
          nom.inertia.cwiseProduct(
              icfg.k_omega.cwiseProduct(u.omega - x.s.omega));
      n_c = allocate(u.f, tau_c, x.n, nom, icfg.newton_iters);
    }

    SimFrame fr;
    fr.t = t;
    fr.x_q = x.s.x_q;
    fr.v_q = x.s.v_q;
    fr.x_l = x.s.x_l;
    fr.v_l = x.s.v_l;
    fr.ref_l = traj.evaluate(t, 0);
    fr.omega = x.s.omega;
    fr.f_cmd = u.f;
    {
      const Eigen::Vector4d nd = (n_c - x.n) / nom.rotor.motor_tau;
      fr.tension = cable_tension(x.s, rotor_forward(x.n, nd, nom.rotor).f,
                                 truep, ext_true);
    }
    fr.energy = mechanical_energy(x.s, truep);
    fr.est_f_q = fe.f_q;
    fr.est_f_l = fe.f_l;
    out.frames.push_back(fr);

    if (k == n_steps) break;
    const double tension =
        truth_step(x, n_c, truep, ext_true, tau_bias, sc.sim_dt);
    if (!(tension > 0.0) || !x.s.x_l.allFinite()) {
      out.message = tension > 0.0 ? "state diverged" : "cable went slack";
      out.abort_time = t + sc.sim_dt;
      RunMetrics partial = compute_metrics(out.frames, traj, nom);
      partial.nmpc_degraded = out.metrics.nmpc_degraded;
      partial.estimator_stale = out.metrics.estimator_stale;
      partial.max_solve_ms = out.metrics.max_solve_ms;
      if (solve_count > 0) partial.mean_solve_ms = solve_sum / solve_count;
      out.metrics = partial;
      return out;
    }
  }

  const int degraded = out.metrics.nmpc_degraded;
  const int stale = out.metrics.estimator_stale;
  const double max_ms = out.metrics.max_solve_ms;
  out.metrics = compute_metrics(out.frames, traj, nom);
  out.metrics.nmpc_degraded = degraded;
  out.metrics.estimator_stale = stale;
  out.metrics.max_solve_ms = max_ms;
  if (solve_count > 0) out.metrics.mean_solve_ms = solve_sum / solve_count;
  out.ok = true;
  out.message = "completed";
  return out;
}

void write_run_csv(const RunResult& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "t,xq_x,xq_y,xq_z,vq_x,vq_y,vq_z,xl_x,xl_y,xl_z,vl_x,vl_y,vl_z,"
        "ref_x,ref_y,ref_z,om_x,om_y,om_z,f_cmd,tension,energy,"
        "efq_x,efq_y,efq_z,efl_x,efl_y,efl_z\n";
  char buf[32];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    os << buf << sep;
  };
  for (const SimFrame& f : r.frames) {
    put(f.t, ',');
    for (int i = 0; i < 3; ++i) put(f.x_q(i), ',');
    for (int i = 0; i < 3; ++i) put(f.v_q(i), ',');
    for (int i = 0; i < 3; ++i) put(f.x_l(i), ',');
    for (int i = 0; i < 3; ++i) put(f.v_l(i), ',');
    for (int i = 0; i < 3; ++i) put(f.ref_l(i), ',');
    for (int i = 0; i < 3; ++i) put(f.omega(i), ',');
    put(f.f_cmd, ',');
    put(f.tension, ',');
    put(f.energy, ',');
    for (int i = 0; i < 3; ++i) put(f.est_f_q(i), ',');
    for (int i = 0; i < 2; ++i) put(f.est_f_l(i), ',');
    put(f.est_f_l(2), '\n');
  }
}

void write_metrics_json(const RunResult& r, const std::string& path) {
  nlohmann::json j;
  j["ok"] = r.ok;
  j["message"] = r.message;
  if (r.abort_time >= 0.0) j["abort_time"] = r.abort_time;
  j["frames"] = r.metrics.frames;
  j["payload_rmse_cm"] = r.metrics.rmse_l_cm;
  j["payload_max_cm"] = r.metrics.max_l_cm;
  j["quad_rmse_cm"] = r.metrics.rmse_q_cm;
  j["quad_max_cm"] = r.metrics.max_q_cm;
  j["nmpc_degraded"] = r.metrics.nmpc_degraded;
  j["estimator_stale"] = r.metrics.estimator_stale;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << "\n";
}

void write_timing_json(const RunResult& r, const std::string& path) {
  nlohmann::json j;
  j["mean_solve_ms"] = r.metrics.mean_solve_ms;
  j["max_solve_ms"] = r.metrics.max_solve_ms;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << "\n";
}

ReplayResult replay_open_loop(const PiecewisePoly& poly,
                              const SystemParams& params, double t0, double t1,
                              double dt) {
  ReplayResult out;
  auto flat_at = [&](double t) {
    FlatSnapshot sn;
    for (int k = 0; k <= 5; ++k) sn.derivs[k] = poly.evaluate(t, k);
    return flat_to_state(sn, params);
  };

  SystemState s;
  try {
    s = flat_at(t0).state;
    const int steps = static_cast<int>(std::lround((t1 - t0) / dt));
    for (int i = 0; i < steps; ++i) {
      const double t = t0 + i * dt;
      const FlatState fa = flat_at(t);
      const FlatState fm = flat_at(t + 0.5 * dt);
      const FlatState fb = flat_at(t + dt);
      const ControlInput ua{fa.f, fa.omega};
      const ControlInput um{fm.f, fm.omega};
      const ControlInput ub{fb.f, fb.omega};

      const StateDerivative k1 = derivative(s, ua, params);
      const StateDerivative k2 = derivative(advance(s, k1, 0.5 * dt), um, params);
      const StateDerivative k3 = derivative(advance(s, k2, 0.5 * dt), um, params);
      const StateDerivative k4 = derivative(advance(s, k3, dt), ub, params);

      SystemState next = advance(s, k1, dt / 6.0);
      next = advance(next, k2, dt / 3.0);
      next = advance(next, k3, dt / 3.0);
      next = advance(next, k4, dt / 6.0);
      // Renormalize the unit quantities but leave x_q free-running: the point
      // is to measure drift, not to re-impose the constraint.
      next.q.normalize();
      next.rho.normalize();
      next.rho_dot -= next.rho.dot(next.rho_dot) * next.rho;
      s = next;

      const FlatState ref = flat_at(t + dt);
      out.max_err_l = std::max(out.max_err_l, (s.x_l - ref.state.x_l).norm());
      out.max_err_q = std::max(out.max_err_q, (s.x_q - ref.state.x_q).norm());
    }
  } catch (const std::exception& e) {
    out.message = e.what();
    return out;
  }
  out.ok = true;
  out.message = "completed";
  return out;
}

PiecewisePoly build_fig8_trajectory(const Eigen::Vector2d& center, double a,
                                    double b, double height,
                                    double peak_speed) {
  if (peak_speed <= 0.0) throw std::invalid_argument("peak speed must be > 0");
  // The eight is emitted analytically, not fitted: x = a sin(phi),
  // y = (b/2) sin(2 phi) at constant phase rate, with an exponential ramp on
  // phi so the lap starts and ends at rest. Fitting a high-order spline
  // through samples of this curve leaves piece-scale waviness that is
  // invisible in position but explodes through four and five derivatives --
  // exactly the orders the thrust and body-rate references are built from.
  // Taylor pieces of the closed form have no such freedom.
  //
  // Peak path speed over a lap is |dp/dphi|_max * phi_dot = sqrt(a^2 + b^2)
  // at the crossings, which sets the phase rate. The tips are slower by
  // b / sqrt(a^2 + b^2), which is what keeps their tight radius flyable.
  const double omega = peak_speed / std::sqrt(a * a + b * b);
  const double tau = 0.8;  // ramp constant, s
  const int laps = 2;
  const double rt_pi = std::sqrt(M_PI);

  // Gaussian ramp on the phase rate,
  //   phi_dot(t) = omega (1 - e^{-(t/tau)^2} - e^{-((T-t)/tau)^2}),
  // so the lap not only starts at rest but with zero acceleration -- a hard
  // kick at t = 0 is exactly what a vehicle that has to tilt before it can
  // accelerate cannot follow. Total time such that phi(T) covers the laps.
  double t_total = 2.0 * M_PI * laps / omega + rt_pi * tau;
  for (int it = 0; it < 8; ++it) {
    t_total = 2.0 * M_PI * laps / omega +
              rt_pi * tau * std::erf(t_total / tau);
  }

  const int pieces = std::max(24, static_cast<int>(std::ceil(t_total / 0.08)));
  const double dt = t_total / pieces;

  PiecewisePoly out;
  out.coeffs.setZero(8 * pieces, 3);
  out.durations = Eigen::VectorXd::Constant(pieces, dt);

  for (int i = 0; i < pieces; ++i) {
    const double t0 = i * dt;
    // Normalized Taylor coefficients (f_k = f^{(k)}/k!) of the two Gaussian
    // ramp terms about t0, from g' = -(2 u / tau^2) g with u the (local)
    // argument, then of phi by integrating the rate series.
    double g1[8], g2[8];
    g1[0] = std::exp(-(t0 / tau) * (t0 / tau));
    g2[0] = std::exp(-((t_total - t0) / tau) * ((t_total - t0) / tau));
    for (int k = 0; k < 7; ++k) {
      const double gm1 = (k >= 1) ? g1[k - 1] : 0.0;
      const double gm2 = (k >= 1) ? g2[k - 1] : 0.0;
      g1[k + 1] = -(2.0 / (tau * tau)) * (t0 * g1[k] + gm1) / (k + 1);
      g2[k + 1] = (2.0 / (tau * tau)) * ((t_total - t0) * g2[k] - gm2) / (k + 1);
    }
    double phi[8];
    phi[0] = omega * (t0 - 0.5 * rt_pi * tau * std::erf(t0 / tau) -
                      0.5 * rt_pi * tau *
                          (std::erf(t_total / tau) -
                           std::erf((t_total - t0) / tau)));
    for (int k = 0; k < 7; ++k) {
      const double rate_k = omega * ((k == 0 ? 1.0 : 0.0) - g1[k] - g2[k]);
      phi[k + 1] = rate_k / (k + 1);
    }

    // Series for sin/cos of phi and of 2 phi via S' = C phi', C' = -S phi'.
    auto trig_series = [&](double mult, double* s, double* c) {
      s[0] = std::sin(mult * phi[0]);
      c[0] = std::cos(mult * phi[0]);
      for (int k = 0; k < 7; ++k) {
        double sd = 0.0, cd = 0.0;  // k-th series coeff of S', C'
        for (int j = 0; j <= k; ++j) {
          const double pd = mult * (j + 1) * phi[j + 1];  // (phi')_j
          sd += pd * c[k - j];
          cd -= pd * s[k - j];
        }
        s[k + 1] = sd / (k + 1);
        c[k + 1] = cd / (k + 1);
      }
    };
    double s1[8], c1[8], s2[8], c2[8];
    trig_series(1.0, s1, c1);
    trig_series(2.0, s2, c2);

    for (int k = 0; k < 8; ++k) {
      out.coeffs(8 * i + k, 0) = a * s1[k];
      out.coeffs(8 * i + k, 1) = 0.5 * b * s2[k];
    }
    out.coeffs(8 * i, 0) += center.x();
    out.coeffs(8 * i, 1) += center.y();
    out.coeffs(8 * i, 2) = height;
  }

  out.head = BoundaryCond::rest(out.piece_eval(0, 0.0, 0));
  out.tail = BoundaryCond::rest(out.piece_eval(pieces - 1, dt, 0));
  return out;
}

std::vector<AblationEntry> run_ablation(const Scenario& base,
                                        const PiecewisePoly& traj) {
  std::vector<AblationEntry> out;
  for (const char* v : {"plain", "indi", "force", "full"}) {
    Scenario sc = base;
    apply_variant(sc, v);
    const RunResult r = run_scenario(sc, traj);
    out.push_back({v, r.ok, r.metrics});
  }
  return out;
}

}  // namespace slungload
