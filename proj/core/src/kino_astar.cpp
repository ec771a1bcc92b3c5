#include "slungload/kino_astar.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_map>

#include "slungload/flatness.hpp"

namespace slungload {

double KinoPath::total_time() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.tau;
  return t;
}

void KinoPath::sample(double t, Eigen::Vector3d& x, Eigen::Vector3d& v,
                      Eigen::Vector3d& a) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const bool last = i + 1 == segments.size();
    if (t <= acc + s.tau || last) {
      const double dt = std::min(std::max(t - acc, 0.0), s.tau);
      a = s.a0 + s.a_slope * dt;
      v = s.v0 + s.a0 * dt + 0.5 * s.a_slope * dt * dt;
      x = s.x0 + s.v0 * dt + 0.5 * s.a0 * dt * dt +
          s.a_slope * dt * dt * dt / 6.0;
      return;
    }
    acc += s.tau;
  }
  x = v = a = Eigen::Vector3d::Zero();
}

double KinoPath::arc_length(double dt) const {
  const double total = total_time();
  double len = 0.0;
  Eigen::Vector3d x, v, a, prev;
  sample(0.0, prev, v, a);
  for (double t = dt; t < total + dt; t += dt) {
    sample(std::min(t, total), x, v, a);
    len += (x - prev).norm();
    prev = x;
  }
  return len;
}

double primitive_cost(const Eigen::Vector3d& u, double tau, double lambda) {
  return (u.squaredNorm() + lambda) * tau;
}

namespace {

// Positive real roots of x^4 + a3 x^3 + a2 x^2 + a1 x + a0, via the
// companion-matrix eigenvalues (deterministic, no iteration-order issues).
void quartic_positive_roots(double a3, double a2, double a1, double a0,
                            std::vector<double>& out) {
  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;
  companion(0, 3) = -a0;
  companion(1, 3) = -a1;
  companion(2, 3) = -a2;
  companion(3, 3) = -a3;
  const Eigen::EigenSolver<Eigen::Matrix4d> es(companion);
  for (int i = 0; i < 4; ++i) {
    const auto z = es.eigenvalues()(i);
    if (std::abs(z.imag()) < 1e-8 * std::max(1.0, std::abs(z.real())) &&
        z.real() > 1e-9)
      out.push_back(z.real());
  }
}

// Fixed-horizon optimal-control cost of the double-integrator two-point
// problem (control linear in time): J(T) = 12|dp|^2/T^3 - 12 (v0+v1).dp / T^2
// + 4 (|v0|^2 + v0.v1 + |v1|^2)/T with dp = x1 - x0.
double obvp_cost(const Eigen::Vector3d& dp, const Eigen::Vector3d& v0,
                 const Eigen::Vector3d& v1, double t) {
  return 12.0 * dp.squaredNorm() / (t * t * t) -
         12.0 * (v0 + v1).dot(dp) / (t * t) +
         4.0 * (v0.squaredNorm() + v0.dot(v1) + v1.squaredNorm()) / t;
}

double obvp_best_time(const Eigen::Vector3d& dp, const Eigen::Vector3d& v0,
                      const Eigen::Vector3d& v1, double lambda, double t_min) {
  // d/dT [J + lambda T] = 0  =>  lambda T^4 - 4(|v0|^2+v0.v1+|v1|^2) T^2
  //                              + 24 (v0+v1).dp T - 36 |dp|^2 = 0
  std::vector<double> candidates;
  quartic_positive_roots(
      0.0, -4.0 * (v0.squaredNorm() + v0.dot(v1) + v1.squaredNorm()) / lambda,
      24.0 * (v0 + v1).dot(dp) / lambda, -36.0 * dp.squaredNorm() / lambda,
      candidates);
  double best_t = t_min, best = obvp_cost(dp, v0, v1, t_min) + lambda * t_min;
  for (double t : candidates) {
    if (t < t_min) continue;
    const double c = obvp_cost(dp, v0, v1, t) + lambda * t;
    if (c < best) {
      best = c;
      best_t = t;
    }
  }
  return best_t;
}

struct BinKey {
  int x, y, z, vx, vy, vz;
  bool operator==(const BinKey& o) const {
    return x == o.x && y == o.y && z == o.z && vx == o.vx && vy == o.vy &&
           vz == o.vz;
  }
};

struct BinHash {
  std::size_t operator()(const BinKey& k) const {
    std::size_t h = 1469598103934665603ull;
    for (int v : {k.x, k.y, k.z, k.vx, k.vy, k.vz}) {
      h ^= static_cast<std::size_t>(static_cast<unsigned>(v));
      h *= 1099511628211ull;
    }
    return h;
  }
};

struct OpenEntry {
  double f;
  long seq;  // FIFO tie-break
  int node;
};
struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    return a.seq > b.seq;
  }
};

}  // namespace

double kino_heuristic(const Eigen::Vector3d& x_l, const Eigen::Vector3d& v_l,
                      const Eigen::Vector3d& goal, double lambda,
                      double v_max) {
  const Eigen::Vector3d dp = goal - x_l;
  if (dp.norm() < 1e-9 && v_l.norm() < 1e-9) return 0.0;
  const double t_min =
      std::max(dp.lpNorm<Eigen::Infinity>() / v_max, 1e-4);
  const Eigen::Vector3d v1 = Eigen::Vector3d::Zero();
  const double t = obvp_best_time(dp, v_l, v1, lambda, t_min);
  return obvp_cost(dp, v_l, v1, t) + lambda * t;
}

bool bubbles_free(const EsdfMap& map, const SystemParams& params,
                  const SearchConfig& cfg, const Eigen::Vector3d& x_l,
                  const Eigen::Vector3d& a_l, double inflate) {
  const Eigen::Vector3d w = a_l + Eigen::Vector3d(0.0, 0.0, params.g);
  if (w.norm() <= kTautEps) return false;  // slack cable: treat as invalid
  const Eigen::Vector3d rho = -w.normalized();
  for (int j = 0; j <= cfg.n_bubbles; ++j) {
    const double frac = static_cast<double>(j) / cfg.n_bubbles;
    const Eigen::Vector3d c = x_l - frac * params.l * rho;
    const double radius = (j == cfg.n_bubbles ? cfg.d_q : cfg.d_l) + inflate;
    if (map.query(c).distance < radius) return false;
  }
  return true;
}

namespace {

bool primitive_free(const EsdfMap& map, const SystemParams& params,
                    const SearchConfig& cfg, const Eigen::Vector3d& x0,
                    const Eigen::Vector3d& v0, const Eigen::Vector3d& u,
                    double tau, const Eigen::Vector3d& bmin,
                    const Eigen::Vector3d& bmax) {
  const int steps = std::max(1, static_cast<int>(std::ceil(tau / cfg.check_dt)));
  for (int k = 1; k <= steps; ++k) {
    const double t = tau * k / steps;
    const Eigen::Vector3d x = x0 + v0 * t + 0.5 * u * t * t;
    if ((x.array() < bmin.array()).any() || (x.array() > bmax.array()).any())
      return false;
    if (!bubbles_free(map, params, cfg, x, u)) return false;
  }
  return true;
}

// Goal segment with linear acceleration u(t) = a0 + slope*t.
bool goal_segment_ok(const EsdfMap& map, const SystemParams& params,
                     const SearchConfig& cfg, const KinoPath::Segment& seg,
                     const Eigen::Vector3d& bmin, const Eigen::Vector3d& bmax) {
  const int steps =
      std::max(2, static_cast<int>(std::ceil(seg.tau / cfg.check_dt)));
  for (int k = 0; k <= steps; ++k) {
    const double t = seg.tau * k / steps;
    const Eigen::Vector3d a = seg.a0 + seg.a_slope * t;
    const Eigen::Vector3d v = seg.v0 + seg.a0 * t + 0.5 * seg.a_slope * t * t;
    const Eigen::Vector3d x = seg.x0 + seg.v0 * t + 0.5 * seg.a0 * t * t +
                              seg.a_slope * t * t * t / 6.0;
    if (a.norm() > cfg.a_max) return false;
    if (v.norm() > cfg.v_max) return false;
    if ((x.array() < bmin.array()).any() || (x.array() > bmax.array()).any())
      return false;
    if (!bubbles_free(map, params, cfg, x, a)) return false;
  }
  return true;
}

}  // namespace

SearchResult kino_search(const EsdfMap& map, const SystemParams& params,
                         const Eigen::Vector3d& start_x,
                         const Eigen::Vector3d& start_v,
                         const Eigen::Vector3d& goal, const SearchConfig& cfg) {
  SearchResult res;
  const Eigen::Vector3d bmin = map.origin();
  const Eigen::Vector3d bmax =
      map.origin() + map.resolution() * map.dims().cast<double>();

  if (!bubbles_free(map, params, cfg, start_x, Eigen::Vector3d::Zero())) {
    res.failure_reason = "start in collision";
    return res;
  }

  // Acceleration lattice, taut-feasible only (u_z + g must stay positive).
  std::vector<Eigen::Vector3d> lattice;
  const int ns = cfg.u_samples_per_axis;
  for (int ix = 0; ix < ns; ++ix)
    for (int iy = 0; iy < ns; ++iy)
      for (int iz = 0; iz < ns; ++iz) {
        const auto lev = [&](int i) {
          return ns == 1 ? 0.0 : -cfg.a_max + 2.0 * cfg.a_max * i / (ns - 1);
        };
        const Eigen::Vector3d u(lev(ix), lev(iy), lev(iz));
        if (u.norm() > cfg.a_max + 1e-9) continue;
        if (u.z() + params.g <= kTautEps + 1e-6) continue;
        lattice.push_back(u);
      }

  std::vector<KinoNode> nodes;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
  std::unordered_map<BinKey, double, BinHash> best_g;
  const auto key_of = [&](const Eigen::Vector3d& x, const Eigen::Vector3d& v) {
    return BinKey{static_cast<int>(std::floor(x.x() / cfg.prune_voxel)),
                  static_cast<int>(std::floor(x.y() / cfg.prune_voxel)),
                  static_cast<int>(std::floor(x.z() / cfg.prune_voxel)),
                  static_cast<int>(std::floor(v.x() / cfg.prune_vel)),
                  static_cast<int>(std::floor(v.y() / cfg.prune_vel)),
                  static_cast<int>(std::floor(v.z() / cfg.prune_vel))};
  };

  KinoNode start;
  start.x_l = start_x;
  start.v_l = start_v;
  start.f_cost = kino_heuristic(start_x, start_v, goal, cfg.lambda, cfg.v_max);
  nodes.push_back(start);
  open.push({start.f_cost, 0, 0});
  best_g[key_of(start_x, start_v)] = 0.0;
  long seq = 1;

  const auto finish = [&](int idx, const KinoPath::Segment& goal_seg,
                          double connect_cost) {
    std::vector<int> chain;
    for (int i = idx; i >= 0; i = nodes[i].parent) chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      const KinoNode& a = nodes[chain[k]];
      const KinoNode& b = nodes[chain[k + 1]];
      KinoPath::Segment s;
      s.x0 = a.x_l;
      s.v0 = a.v_l;
      s.a0 = b.u;
      s.tau = b.tau;
      res.path.segments.push_back(s);
      res.nodes.push_back(a);
    }
    res.nodes.push_back(nodes[idx]);
    if (goal_seg.tau > 0.0) res.path.segments.push_back(goal_seg);
    res.cost = nodes[idx].g_cost + connect_cost;
    res.success = true;
  };

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    KinoNode cur = nodes[top.node];
    {
      const auto it = best_g.find(key_of(cur.x_l, cur.v_l));
      if (it != best_g.end() && cur.g_cost > it->second + 1e-12) continue;
    }
    ++res.expanded;
    if (res.expanded > cfg.max_expansions) {
      res.failure_reason = "expansion budget exhausted";
      return res;
    }

    // Analytic one-shot connection to the goal at rest.
    {
      const Eigen::Vector3d dp = goal - cur.x_l;
      if (dp.norm() < cfg.goal_tol && cur.v_l.norm() < cfg.prune_vel) {
        finish(top.node, KinoPath::Segment{}, 0.0);
        return res;
      }
      const double t_min = std::max(
          dp.lpNorm<Eigen::Infinity>() / cfg.v_max, 2.0 * cfg.check_dt);
      const double tg =
          obvp_best_time(dp, cur.v_l, Eigen::Vector3d::Zero(), cfg.lambda, t_min);
      KinoPath::Segment seg;
      seg.x0 = cur.x_l;
      seg.v0 = cur.v_l;
      seg.tau = tg;
      // u(t) = alpha t + beta per axis, from the two-point conditions.
      const Eigen::Vector3d dv = -cur.v_l;
      const Eigen::Vector3d dpf = dp - cur.v_l * tg;
      seg.a_slope = (6.0 * dv * tg - 12.0 * dpf) / (tg * tg * tg);
      seg.a0 = (6.0 * dpf - 2.0 * dv * tg) / (tg * tg);
      if (goal_segment_ok(map, params, cfg, seg, bmin, bmax)) {
        const double jc =
            obvp_cost(dp, cur.v_l, Eigen::Vector3d::Zero(), tg) +
            cfg.lambda * tg;
        finish(top.node, seg, jc);
        return res;
      }
    }

    for (const Eigen::Vector3d& u : lattice)
      for (double tau : cfg.tau_samples) {
        const Eigen::Vector3d nx = cur.x_l + cur.v_l * tau + 0.5 * u * tau * tau;
        const Eigen::Vector3d nv = cur.v_l + u * tau;
        if (nv.norm() > cfg.v_max) continue;
        if ((nx.array() < bmin.array()).any() ||
            (nx.array() > bmax.array()).any())
          continue;
        const double g_new = cur.g_cost + primitive_cost(u, tau, cfg.lambda);
        const BinKey key = key_of(nx, nv);
        const auto it = best_g.find(key);
        if (it != best_g.end() && it->second <= g_new) continue;
        if (!primitive_free(map, params, cfg, cur.x_l, cur.v_l, u, tau, bmin,
                            bmax))
          continue;
        best_g[key] = g_new;
        KinoNode nb;
        nb.x_l = nx;
        nb.v_l = nv;
        nb.g_cost = g_new;
        nb.f_cost =
            g_new + kino_heuristic(nx, nv, goal, cfg.lambda, cfg.v_max);
        nb.parent = top.node;
        nb.u = u;
        nb.tau = tau;
        nodes.push_back(nb);
        open.push({nb.f_cost, seq++, static_cast<int>(nodes.size()) - 1});
      }
  }
  res.failure_reason =
      "open list exhausted after " + std::to_string(res.expanded) + " expansions";
  return res;
}

}  // namespace slungload
