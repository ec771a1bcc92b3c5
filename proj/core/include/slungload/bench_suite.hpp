#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slungload/scenario.hpp"

namespace slungload {

struct BenchInstance {
  std::uint64_t seed = 0;
  bool success = false;
  double plan_ms = 0.0;     // planning call only, excludes map construction
  double traj_length = 0.0; // m
  double traj_time = 0.0;   // s
  std::string failure;
};

struct BenchFamilyResult {
  std::string family;
  std::vector<BenchInstance> instances;

  int successes() const;
  double mean_plan_ms() const;
  std::string table() const;  // human summary
};

// Seeded random instance of one of the planning families:
//   12-squares  - twelve square pillars scattered across the corridor
//   random-gap  - a full wall with one 0.8 m opening at a random offset
//   clutter     - spheres packed to ~40% projected density
// Unknown family names throw.
Scenario make_bench_instance(const std::string& family, std::uint64_t seed);

// Plans each instance and scores it by the independent feasibility audit.
BenchFamilyResult run_bench_family(const std::string& family, int count,
                                   std::uint64_t seed_base);

}  // namespace slungload
