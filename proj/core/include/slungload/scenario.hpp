#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slungload/esdf.hpp"
#include "slungload/traj_opt.hpp"

namespace slungload {

// Constant wind plus an optional sinusoidal gust, switched on at `start`.
struct WindProfile {
  Eigen::Vector3d base = Eigen::Vector3d::Zero();      // m/s
  Eigen::Vector3d gust_amp = Eigen::Vector3d::Zero();  // m/s
  double gust_hz = 0.0;
  double start = 0.0;

  Eigen::Vector3d velocity(double t) const;
  bool active() const;
};

struct AttachEvent {
  double time = -1.0;  // s; negative = never
  double mass = 0.0;   // kg added to the payload
  // Engagement window: the mass blends in over this long. A true step is
  // unphysical (nothing latches instantaneously) and the discontinuity can
  // shock the cable slack mid-maneuver.
  double ramp = 0.25;  // s
};

struct Scenario {
  std::string name = "scenario";
  SystemParams params;
  DynamicLimits limits;
  PlannerWeights weights;

  // World: either a grid file or primitives rasterized into a box.
  std::string map_file;
  std::vector<Primitive> obstacles;
  Eigen::Vector3d map_origin{-1.0, -1.0, 0.0};
  Eigen::Vector3d map_size{10.0, 6.0, 3.5};
  double resolution = 0.1;

  // Mission: plan start->goal, or track a provided/figure-eight trajectory.
  Eigen::Vector3d start{0.0, 0.0, 1.0};
  Eigen::Vector3d goal{5.0, 0.0, 1.0};
  std::string trajectory_file;
  bool figure_eight = false;
  double fig8_a = 1.8, fig8_b = 0.9, fig8_height = 1.5;
  double fig8_speed = 4.0;  // target peak payload speed, m/s

  // Disturbances.
  WindProfile wind;
  double c_da_q = 0.01;   // drag area, quadrotor, m^2
  double c_da_l = 0.005;  // drag area, payload, m^2
  AttachEvent attach;
  Eigen::Vector3d body_torque_bias = Eigen::Vector3d::Zero();  // N*m
  double torque_bias_start = 0.0;

  // Controller stack.
  bool force_comp = true;
  bool use_indi = true;

  // Timing, seeding, sensing.
  double duration = 10.0;  // s simulated after the trajectory starts
  double sim_dt = 1e-3;
  int control_every = 10;  // sim steps per NMPC/estimator cycle (100 Hz)
  double acc_noise_sigma = 0.05;  // m/s^2, estimator measurements only
  std::uint64_t seed = 1;

  bool has_map() const { return !map_file.empty() || !obstacles.empty(); }
  EsdfMap build_map() const;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& sc, const std::string& path);

// Applies a named ablation variant to the controller flags:
// plain | indi | force | full.
void apply_variant(Scenario& sc, const std::string& variant);

}  // namespace slungload
