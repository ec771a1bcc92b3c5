#include "slungload/bench_suite.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "slungload/traj_opt.hpp"

namespace slungload {

namespace {

// Shared corridor: plan 10 m down +x with ~2.4 m of lateral room each side.
constexpr double kStartX = 0.0, kGoalX = 10.0, kFlightZ = 1.2;
constexpr double kKeepClear = 1.2;  // m around start/goal, obstacle-free

void corridor_geometry(Scenario& sc) {
  sc.map_origin = {-1.0, -3.2, 0.0};
  sc.map_size = {12.0, 6.4, 3.0};
  sc.resolution = 0.1;
  sc.start = {kStartX, 0.0, kFlightZ};
  sc.goal = {kGoalX, 0.0, kFlightZ};
}

bool clears_endpoints(const Eigen::Vector2d& c, double extent,
                      const Scenario& sc) {
  const Eigen::Vector2d s(sc.start.x(), sc.start.y());
  const Eigen::Vector2d g(sc.goal.x(), sc.goal.y());
  return (c - s).norm() > extent + kKeepClear &&
         (c - g).norm() > extent + kKeepClear;
}

void gen_squares(Scenario& sc, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(1.5, 8.5), uy(-2.4, 2.4),
      uside(0.4, 0.8);
  int placed = 0, attempts = 0;
  while (placed < 12 && attempts < 4000) {
    ++attempts;
    const Eigen::Vector2d c(ux(rng), uy(rng));
    const double half = 0.5 * uside(rng);
    if (!clears_endpoints(c, half * std::sqrt(2.0), sc)) continue;
    sc.obstacles.push_back(
        Primitive::box({c.x() - half, c.y() - half, 0.0},
                       {c.x() + half, c.y() + half, sc.map_size.z()}));
    ++placed;
  }
}

void gen_gap(Scenario& sc, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uc(-1.6, 1.6);
  const double yc = uc(rng);       // gap center
  const double half_gap = 0.4;     // 0.8 m opening
  const double x0 = 4.85, x1 = 5.15;
  const double y_lo = sc.map_origin.y(), y_hi = sc.map_origin.y() + sc.map_size.y();
  sc.obstacles.push_back(
      Primitive::box({x0, y_lo, 0.0}, {x1, yc - half_gap, sc.map_size.z()}));
  sc.obstacles.push_back(
      Primitive::box({x0, yc + half_gap, 0.0}, {x1, y_hi, sc.map_size.z()}));
}

void gen_clutter(Scenario& sc, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(1.5, 8.5), uy(-2.4, 2.4),
      uz(0.3, 2.7), ur(0.15, 0.3);
  // "Density" here is summed disc cross-section over the scatter region's
  // footprint; spheres sit at random heights, so 3-D passages survive well
  // past the point where the top view looks closed.
  const double target = 0.40 * (8.5 - 1.5) * (2.4 + 2.4);
  double area = 0.0;
  int attempts = 0;
  while (area < target && attempts < 10000) {
    ++attempts;
    const double r = ur(rng);
    const Eigen::Vector3d c(ux(rng), uy(rng), uz(rng));
    if (!clears_endpoints(c.head<2>(), r, sc)) continue;
    sc.obstacles.push_back(Primitive::sphere(c, r));
    area += M_PI * r * r;
  }
}

double trajectory_length(const PiecewisePoly& poly) {
  const double dt = 0.005;
  double len = 0.0;
  Eigen::Vector3d prev = poly.evaluate(0.0, 0);
  for (double t = dt; t < poly.total_time() + 0.5 * dt; t += dt) {
    const Eigen::Vector3d p = poly.evaluate(t, 0);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

}  // namespace

Scenario make_bench_instance(const std::string& family, std::uint64_t seed) {
  Scenario sc;
  sc.name = family + "-" + std::to_string(seed);
  sc.seed = seed;
  corridor_geometry(sc);
  std::mt19937_64 rng(seed);
  if (family == "12-squares") {
    gen_squares(sc, rng);
  } else if (family == "random-gap") {
    gen_gap(sc, rng);
  } else if (family == "clutter") {
    gen_clutter(sc, rng);
  } else {
    throw std::invalid_argument("unknown bench family: " + family);
  }
  return sc;
}

BenchFamilyResult run_bench_family(const std::string& family, int count,
                                   std::uint64_t seed_base) {
  BenchFamilyResult out;
  out.family = family;
  for (int i = 0; i < count; ++i) {
    const Scenario sc = make_bench_instance(family, seed_base + i);
    const EsdfMap map = sc.build_map();  // excluded from planning time

    PlannerConfig cfg;
    cfg.limits = sc.limits;
    cfg.weights = sc.weights;
    cfg.search.v_max = sc.limits.v_max;
    cfg.search.a_max = sc.limits.a_max;

    const PlanResult r = plan_trajectory(map, sc.params, cfg, sc.start, sc.goal);

    BenchInstance inst;
    inst.seed = sc.seed;
    inst.plan_ms = r.search_ms + r.optimize_ms;
    inst.success = r.success && inst.plan_ms < 10000.0;
    if (!r.success) inst.failure = r.failure_reason;
    if (r.success) {
      inst.traj_length = trajectory_length(r.poly);
      inst.traj_time = r.poly.total_time();
    }
    out.instances.push_back(inst);
  }
  return out;
}

int BenchFamilyResult::successes() const {
  int n = 0;
  for (const BenchInstance& b : instances) n += b.success ? 1 : 0;
  return n;
}

double BenchFamilyResult::mean_plan_ms() const {
  if (instances.empty()) return 0.0;
  double sum = 0.0;
  for (const BenchInstance& b : instances) sum += b.plan_ms;
  return sum / instances.size();
}

std::string BenchFamilyResult::table() const {
  std::string s;
  char line[160];
  std::snprintf(line, sizeof(line), "family %s: %d/%zu ok, mean plan %.1f ms\n",
                family.c_str(), successes(), instances.size(), mean_plan_ms());
  s += line;
  for (const BenchInstance& b : instances) {
    std::snprintf(line, sizeof(line),
                  "  seed %llu  %s  %8.1f ms  len %6.2f m  time %5.2f s  %s\n",
                  static_cast<unsigned long long>(b.seed),
                  b.success ? "ok  " : "FAIL", b.plan_ms, b.traj_length,
                  b.traj_time, b.failure.c_str());
    s += line;
  }
  return s;
}

}  // namespace slungload
