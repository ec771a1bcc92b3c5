#include "slungload/numopt.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace slungload {

namespace {

// Minimizer of the cubic interpolating (a, fa, dfa) and (b, fb, dfb),
// safeguarded to the interior of [a, b]; falls back to bisection when the
// interpolation degenerates.
double cubic_min(double a, double fa, double dfa, double b, double fb,
                 double dfb) {
  const double d1 = dfa + dfb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - dfa * dfb;
  if (disc < 0.0) return 0.5 * (a + b);
  const double s = (b >= a ? 1.0 : -1.0) * std::sqrt(disc);
  const double denom = dfb - dfa + 2.0 * s;
  if (std::abs(denom) < 1e-32) return 0.5 * (a + b);
  double c = b - (b - a) * (dfb + s - d1) / denom;
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(c) || c < lo + margin || c > hi - margin)
    c = 0.5 * (a + b);
  return c;
}

struct LineSearchEval {
  double alpha, f, df;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  LbfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(n);
  res.value = objective(res.x, res.gradient);
  res.evaluations = 1;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  Eigen::VectorXd g_new(n), x_new(n), d(n), q(n);

  for (res.iterations = 0; res.iterations < opts.max_iters; ++res.iterations) {
    if (res.gradient.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.status = LbfgsStatus::kConverged;
      return res;
    }

    // Two-loop recursion for d = -H g.
    q = res.gradient;
    const int m = static_cast<int>(s_hist.size());
    Eigen::VectorXd alpha_buf(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha_buf(i) = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha_buf(i) * y_hist[i];
    }
    if (m > 0) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha_buf(i) - beta) * s_hist[i];
    }
    d = -q;

    double dg0 = d.dot(res.gradient);
    if (dg0 >= 0.0) {  // stale curvature; restart on steepest descent
      d = -res.gradient;
      dg0 = -res.gradient.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // Strong-Wolfe search (bracket + zoom, cubic interpolation).
    const double f0 = res.value;
    const auto phi = [&](double alpha) {
      x_new = res.x + alpha * d;
      const double f = objective(x_new, g_new);
      ++res.evaluations;
      return LineSearchEval{alpha, f, d.dot(g_new)};
    };
    const auto wolfe_ok = [&](const LineSearchEval& e) {
      return e.f <= f0 + opts.c1 * e.alpha * dg0 &&
             std::abs(e.df) <= -opts.c2 * dg0;
    };

    bool accepted = false;
    LineSearchEval lo{0.0, f0, dg0};
    LineSearchEval cur = phi(std::min(1.0, opts.step_max));
    int ls = 1;
    bool zooming = false;
    LineSearchEval hi = cur;  // set when zooming
    while (ls < opts.max_linesearch) {
      if (!zooming) {
        if (cur.f > f0 + opts.c1 * cur.alpha * dg0 ||
            (ls > 1 && cur.f >= lo.f)) {
          hi = cur;
          zooming = true;
        } else if (std::abs(cur.df) <= -opts.c2 * dg0) {
          accepted = true;
          break;
        } else if (cur.df >= 0.0) {
          hi = lo;
          lo = cur;
          zooming = true;
        } else {
          lo = cur;
          const double next = std::min(2.0 * cur.alpha, opts.step_max);
          if (next == cur.alpha) break;  // stuck at the cap
          cur = phi(next);
          ++ls;
          continue;
        }
      }
      // zoom between lo (best so far) and hi
      const double a =
          cubic_min(lo.alpha, lo.f, lo.df, hi.alpha, hi.f, hi.df);
      cur = phi(a);
      ++ls;
      if (cur.f > f0 + opts.c1 * cur.alpha * dg0 || cur.f >= lo.f) {
        hi = cur;
      } else {
        if (std::abs(cur.df) <= -opts.c2 * dg0) {
          accepted = true;
          break;
        }
        if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = cur;
      }
      if (std::abs(hi.alpha - lo.alpha) <
          1e-16 * std::max(1.0, std::abs(lo.alpha))) {
        accepted = wolfe_ok(lo) || lo.f < f0;
        cur = lo;
        x_new = res.x + cur.alpha * d;
        objective(x_new, g_new);  // restore g_new for the accepted point
        ++res.evaluations;
        break;
      }
    }
    if (!accepted && wolfe_ok(cur)) accepted = true;
    if (!accepted && lo.alpha > 0.0 && lo.f < f0) {
      // Wolfe failed but some decrease exists: take the best point seen and
      // keep going; flagged only if even that is unavailable.
      cur = lo;
      x_new = res.x + cur.alpha * d;
      objective(x_new, g_new);
      ++res.evaluations;
      accepted = true;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    if (!accepted || cur.alpha <= 0.0) {
      res.status = LbfgsStatus::kLineSearchFailed;
      return res;
    }

    // Curvature pair update.
    Eigen::VectorXd s = x_new - res.x;
    Eigen::VectorXd y = g_new - res.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    res.x = x_new;
    res.value = cur.f;
    res.gradient = g_new;
  }
  res.status = res.gradient.lpNorm<Eigen::Infinity>() <= opts.grad_tol
                   ? LbfgsStatus::kConverged
                   : LbfgsStatus::kMaxIterations;
  return res;
}

SmoothL1 smooth_l1(double x, double mu) {
  SmoothL1 out;
  if (x <= 0.0) return out;
  if (x > mu) {
    out.value = x - 0.5 * mu;
    out.derivative = 1.0;
    return out;
  }
  const double xdmu = x / mu;
  const double sq = xdmu * xdmu;
  const double mumxd2 = mu - 0.5 * x;
  out.value = mumxd2 * sq * xdmu;
  out.derivative = sq * (-0.5 * xdmu + 3.0 * mumxd2 / mu);
  return out;
}

HuberEval huber(const Eigen::VectorXd& r, double delta) {
  HuberEval out;
  const double nrm = r.norm();
  if (nrm <= delta) {
    out.value = 0.5 * r.squaredNorm();
    out.gradient = r;
  } else {
    out.value = delta * (nrm - 0.5 * delta);
    out.gradient = (delta / nrm) * r;
  }
  return out;
}

double grad_check(const Objective& objective, const Eigen::VectorXd& x,
                  double h) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd grad(n), scratch(n);
  objective(x, grad);
  Eigen::VectorXd xp = x;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    xp(i) = x(i) + h;
    const double fp = objective(xp, scratch);
    xp(i) = x(i) - h;
    const double fm = objective(xp, scratch);
    xp(i) = x(i);
    const double fd = (fp - fm) / (2.0 * h);
    const double err = std::abs(fd - grad(i)) / std::max(1.0, std::abs(fd));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace slungload
