// Command-line front end: plan | sim | ablate | bench | gate.
// Exit codes: 0 success, 1 domain failure (no plan, infeasible, aborted run),
// 2 usage error (bad flags, unreadable files).
//
// Wall-clock measurements go to *timing.json side files and stdout only;
// everything else written under --out is byte-reproducible for a fixed seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "slungload/bench_suite.hpp"
#include "slungload/sim.hpp"
#include "slungload/traj_opt.hpp"

namespace fs = std::filesystem;
using namespace slungload;

namespace {

bool quiet() {
  const char* v = std::getenv("SLUNG_LOG");
  return v != nullptr && std::string(v) == "quiet";
}

void say(const std::string& s) {
  if (!quiet()) std::cout << s << std::endl;
}

bool try_load(const std::string& path, Scenario& sc) {
  try {
    sc = load_scenario(path);
    return true;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return false;
  }
}

PlannerConfig planner_config(const Scenario& sc) {
  PlannerConfig cfg;
  cfg.limits = sc.limits;
  cfg.weights = sc.weights;
  cfg.search.v_max = sc.limits.v_max;
  cfg.search.a_max = sc.limits.a_max;
  return cfg;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << "\n";
}

// Trajectory source precedence: explicit file, then figure-eight, then a
// fresh plan through the scenario map. Returns 0 and fills `traj`, or an
// exit code.
int resolve_trajectory(const Scenario& sc, const std::string& out,
                       PiecewisePoly& traj) {
  if (!sc.trajectory_file.empty()) {
    try {
      traj = load_trajectory(sc.trajectory_file);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << std::endl;
      return 2;
    }
  }
  if (sc.figure_eight) {
    traj = build_fig8_trajectory({sc.start.x(), sc.start.y()}, sc.fig8_a,
                                 sc.fig8_b, sc.fig8_height, sc.fig8_speed);
    return 0;
  }
  const EsdfMap map = sc.build_map();
  const PlanResult r =
      plan_trajectory(map, sc.params, planner_config(sc), sc.start, sc.goal);
  if (!r.success) {
    std::cerr << "error: planning failed: " << r.failure_reason << std::endl;
    return 1;
  }
  save_trajectory(r.poly, out + "/trajectory.txt");
  traj = r.poly;
  return 0;
}

int cmd_plan(const std::string& scen, long long seed, const std::string& out) {
  Scenario sc;
  if (!try_load(scen, sc)) return 2;
  if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
  fs::create_directories(out);

  const EsdfMap map = sc.build_map();
  const PlanResult r =
      plan_trajectory(map, sc.params, planner_config(sc), sc.start, sc.goal);

  nlohmann::json rep = nlohmann::json::parse(r.report_json());
  nlohmann::json timing{{"search_ms", rep.value("search_ms", 0.0)},
                        {"optimize_ms", rep.value("optimize_ms", 0.0)}};
  rep.erase("search_ms");
  rep.erase("optimize_ms");
  write_json(rep, out + "/report.json");
  write_json(timing, out + "/timing.json");
  if (r.success) save_trajectory(r.poly, out + "/trajectory.txt");

  char line[160];
  std::snprintf(line, sizeof(line),
                "plan %s: pieces %d, total %.2f s, %.1f ms (%s)",
                r.success ? "ok" : "FAILED", r.poly.pieces(),
                r.poly.total_time(), r.search_ms + r.optimize_ms,
                r.success ? "audit-feasible" : r.failure_reason.c_str());
  say(line);
  return r.success ? 0 : 1;
}

int cmd_sim(const std::string& scen, long long seed, const std::string& out,
            const std::string& variant) {
  Scenario sc;
  if (!try_load(scen, sc)) return 2;
  if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
  if (!variant.empty()) {
    try {
      apply_variant(sc, variant);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << std::endl;
      return 2;
    }
  }
  fs::create_directories(out);

  PiecewisePoly traj;
  if (const int rc = resolve_trajectory(sc, out, traj); rc != 0) return rc;

  const RunResult r = run_scenario(sc, traj);
  write_run_csv(r, out + "/run.csv");
  write_metrics_json(r, out + "/metrics.json");
  write_timing_json(r, out + "/timing.json");

  char line[200];
  std::snprintf(line, sizeof(line),
                "sim %s: payload rmse %.2f cm (max %.2f), quad rmse %.2f cm, "
                "%d frames, mean solve %.2f ms",
                r.ok ? "ok" : "ABORTED", r.metrics.rmse_l_cm,
                r.metrics.max_l_cm, r.metrics.rmse_q_cm, r.metrics.frames,
                r.metrics.mean_solve_ms);
  say(line);
  if (!r.ok) std::cerr << "error: " << r.message << std::endl;
  return r.ok ? 0 : 1;
}

int cmd_ablate(const std::string& scen, long long seed,
               const std::string& out) {
  Scenario sc;
  if (!try_load(scen, sc)) return 2;
  if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
  fs::create_directories(out);

  PiecewisePoly traj;
  if (const int rc = resolve_trajectory(sc, out, traj); rc != 0) return rc;

  const auto entries = run_ablation(sc, traj);

  std::ofstream csv(out + "/ablate.csv");
  csv << "variant,ok,frames,payload_rmse_cm,payload_max_cm,quad_rmse_cm,"
         "quad_max_cm,nmpc_degraded,estimator_stale\n";
  nlohmann::json timing = nlohmann::json::object();
  bool all_ok = true;
  char line[200];
  for (const AblationEntry& e : entries) {
    std::snprintf(line, sizeof(line), "%s,%d,%d,%.6f,%.6f,%.6f,%.6f,%d,%d\n",
                  e.variant.c_str(), e.ok ? 1 : 0, e.metrics.frames,
                  e.metrics.rmse_l_cm, e.metrics.max_l_cm, e.metrics.rmse_q_cm,
                  e.metrics.max_q_cm, e.metrics.nmpc_degraded,
                  e.metrics.estimator_stale);
    csv << line;
    timing[e.variant] = {{"mean_solve_ms", e.metrics.mean_solve_ms},
                         {"max_solve_ms", e.metrics.max_solve_ms}};
    all_ok = all_ok && e.ok;
    std::snprintf(line, sizeof(line),
                  "%-6s %s  payload rmse %6.2f cm  max %6.2f cm",
                  e.variant.c_str(), e.ok ? "ok  " : "FAIL",
                  e.metrics.rmse_l_cm, e.metrics.max_l_cm);
    say(line);
  }
  write_json(timing, out + "/timing.json");
  return all_ok ? 0 : 1;
}

int cmd_bench(const std::string& family, int count, long long seed,
              const std::string& out) {
  std::vector<std::string> families;
  if (family == "all") {
    families = {"12-squares", "random-gap", "clutter"};
  } else {
    families = {family};
  }
  fs::create_directories(out);
  const std::uint64_t base = seed >= 0 ? static_cast<std::uint64_t>(seed) : 1;

  std::ofstream csv(out + "/bench.csv");
  csv << "family,seed,success,traj_length_m,traj_time_s\n";
  nlohmann::json timing = nlohmann::json::object();
  char line[160];
  try {
    for (const std::string& f : families) {
      const BenchFamilyResult r = run_bench_family(f, count, base);
      nlohmann::json per = nlohmann::json::array();
      for (const BenchInstance& b : r.instances) {
        std::snprintf(line, sizeof(line), "%s,%llu,%d,%.6f,%.6f\n", f.c_str(),
                      static_cast<unsigned long long>(b.seed),
                      b.success ? 1 : 0, b.traj_length, b.traj_time);
        csv << line;
        per.push_back(b.plan_ms);
      }
      timing[f] = {{"plan_ms", per}, {"mean_plan_ms", r.mean_plan_ms()}};
      say(r.table());
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  write_json(timing, out + "/timing.json");
  return 0;
}

Scenario make_gate_scenario() {
  Scenario sc;
  sc.name = "gate";
  sc.map_origin = {-1.0, -3.0, 0.0};
  sc.map_size = {8.0, 6.0, 3.0};
  sc.resolution = 0.1;
  sc.start = {0.0, 0.0, 1.2};
  sc.goal = {6.0, 0.0, 1.2};
  // Full-height slot, 1.0 m opening, centered on the flight line.
  sc.obstacles.push_back(Primitive::box({2.85, -3.0, 0.0}, {3.15, -0.5, 3.0}));
  sc.obstacles.push_back(Primitive::box({2.85, 0.5, 0.0}, {3.15, 3.0, 3.0}));
  sc.limits.v_max = 5.9;
  sc.limits.a_max = 9.0;
  return sc;
}

int cmd_gate(const std::string& out) {
  const Scenario sc = make_gate_scenario();
  fs::create_directories(out);
  const EsdfMap map = sc.build_map();
  const PlanResult r =
      plan_trajectory(map, sc.params, planner_config(sc), sc.start, sc.goal);

  const double peak_v = r.poly.pieces() ? r.poly.max_derivative_norm(1) : 0.0;
  const double peak_a = r.poly.pieces() ? r.poly.max_derivative_norm(2) : 0.0;
  nlohmann::json rep = nlohmann::json::parse(r.report_json());
  rep.erase("search_ms");
  rep.erase("optimize_ms");
  rep["peak_payload_speed"] = peak_v;
  rep["peak_payload_accel"] = peak_a;
  write_json(rep, out + "/gate.json");
  write_json(nlohmann::json{{"plan_ms", r.search_ms + r.optimize_ms}},
             out + "/timing.json");
  if (r.success) save_trajectory(r.poly, out + "/trajectory.txt");

  char line[200];
  std::snprintf(line, sizeof(line),
                "gate %s: peak speed %.2f m/s, peak accel %.2f m/s^2, "
                "plan %.1f ms",
                r.success ? "ok" : "FAILED", peak_v, peak_a,
                r.search_ms + r.optimize_ms);
  say(line);
  return r.success ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cable-suspended payload planning and tracking toolbox"};
  app.require_subcommand(1);

  std::string scenario_path, out = "out", variant, family = "all";
  long long seed = -1;
  int count = 10;

  CLI::App* plan = app.add_subcommand("plan", "plan through the scenario map");
  plan->add_option("--scenario", scenario_path, "scenario JSON")->required();
  plan->add_option("--seed", seed, "override scenario seed");
  plan->add_option("--out", out, "output directory");

  CLI::App* sim = app.add_subcommand("sim", "closed-loop tracking run");
  sim->add_option("--scenario", scenario_path, "scenario JSON")->required();
  sim->add_option("--seed", seed, "override scenario seed");
  sim->add_option("--out", out, "output directory");
  sim->add_option("--variant", variant, "plain | indi | force | full");

  CLI::App* ablate =
      app.add_subcommand("ablate", "run all controller variants");
  ablate->add_option("--scenario", scenario_path, "scenario JSON")->required();
  ablate->add_option("--seed", seed, "override scenario seed");
  ablate->add_option("--out", out, "output directory");

  CLI::App* bench = app.add_subcommand("bench", "seeded planning benchmark");
  bench->add_option("--family", family, "12-squares | random-gap | clutter | all");
  bench->add_option("--count", count, "instances per family");
  bench->add_option("--seed", seed, "seed base (default 1)");
  bench->add_option("--out", out, "output directory");

  CLI::App* gate = app.add_subcommand("gate", "aggressive 1 m gate scenario");
  gate->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (plan->parsed()) return cmd_plan(scenario_path, seed, out);
    if (sim->parsed()) return cmd_sim(scenario_path, seed, out, variant);
    if (ablate->parsed()) return cmd_ablate(scenario_path, seed, out);
    if (bench->parsed()) return cmd_bench(family, count, seed, out);
    if (gate->parsed()) return cmd_gate(out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 2;
}
