#pragma once

#include <string>
#include <vector>

#include "slungload/dynamics.hpp"
#include "slungload/esdf.hpp"

namespace slungload {

struct KinoNode {
  Eigen::Vector3d x_l = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_l = Eigen::Vector3d::Zero();
  double g_cost = 0.0;
  double f_cost = 0.0;
  int parent = -1;
  Eigen::Vector3d u = Eigen::Vector3d::Zero();  // acceleration reaching this node
  double tau = 0.0;
};

struct SearchConfig {
  int u_samples_per_axis = 3;        // odd; lattice spans [-a_max, a_max]
  std::vector<double> tau_samples{0.2, 0.4};
  double lambda = 10.0;              // time weight in the primitive cost
  double v_max = 4.0;
  double a_max = 5.7;
  double goal_tol = 0.25;            // m
  double prune_voxel = 0.2;          // m, duplicate-pruning cell
  double prune_vel = 0.5;            // m/s, velocity bin
  int n_bubbles = 6;
  double d_l = 0.15;
  double d_q = 0.3;
  double check_dt = 0.05;            // collision sampling along primitives
  int max_expansions = 150000;
};

// Piecewise-constant (lattice) or piecewise-linear (analytic goal segment)
// acceleration profile of the payload.
struct KinoPath {
  struct Segment {
    Eigen::Vector3d x0, v0;
    Eigen::Vector3d a0 = Eigen::Vector3d::Zero();       // accel at segment start
    Eigen::Vector3d a_slope = Eigen::Vector3d::Zero();  // accel rate (goal segment)
    double tau = 0.0;
  };
  std::vector<Segment> segments;

  double total_time() const;
  void sample(double t, Eigen::Vector3d& x, Eigen::Vector3d& v,
              Eigen::Vector3d& a) const;
  double arc_length(double dt = 0.01) const;
};

struct SearchResult {
  bool success = false;
  KinoPath path;
  std::vector<KinoNode> nodes;  // lattice states along the found path
  double cost = 0.0;
  int expanded = 0;
  std::string failure_reason;
};

double primitive_cost(const Eigen::Vector3d& u, double tau, double lambda);

// Minimal cost of steering the double integrator to the goal at rest under
// cost integral(|u|^2) + lambda*T, minimizing over arrival time (quartic
// stationarity condition; candidates bounded below by the v_max travel time).
double kino_heuristic(const Eigen::Vector3d& x_l, const Eigen::Vector3d& v_l,
                      const Eigen::Vector3d& goal, double lambda, double v_max);

// Whole-body collision test: all cable/payload/quadrotor bubbles at payload
// acceleration a_l keep ESDF distance >= radius + inflate.
bool bubbles_free(const EsdfMap& map, const SystemParams& params,
                  const SearchConfig& cfg, const Eigen::Vector3d& x_l,
                  const Eigen::Vector3d& a_l, double inflate = 0.0);

SearchResult kino_search(const EsdfMap& map, const SystemParams& params,
                         const Eigen::Vector3d& start_x,
                         const Eigen::Vector3d& start_v,
                         const Eigen::Vector3d& goal, const SearchConfig& cfg);

}  // namespace slungload
