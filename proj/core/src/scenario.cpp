#include "slungload/scenario.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace slungload {

using nlohmann::json;

Eigen::Vector3d WindProfile::velocity(double t) const {
  if (t < start) return Eigen::Vector3d::Zero();
  Eigen::Vector3d v = base;
  if (gust_hz > 0.0) {
    v += gust_amp * std::sin(2.0 * M_PI * gust_hz * (t - start));
  }
  return v;
}

bool WindProfile::active() const {
  return base.squaredNorm() > 0.0 || gust_amp.squaredNorm() > 0.0;
}

EsdfMap Scenario::build_map() const {
  if (!map_file.empty()) {
    return build_esdf(load_grid(map_file));
  }
  // Rasterizing an empty primitive list still yields a valid free-space map,
  // which is what open-field scenarios want.
  OccupancyGrid grid =
      rasterize(obstacles, map_origin, map_origin + map_size, resolution);
  return build_esdf(grid);
}

namespace {

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error("expected 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void maybe_vec(const json& j, const char* key, Eigen::Vector3d& out) {
  if (auto it = j.find(key); it != j.end()) out = vec3(*it);
}

Primitive parse_primitive(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "box") {
    return Primitive::box(vec3(j.at("min")), vec3(j.at("max")));
  }
  if (kind == "sphere") {
    return Primitive::sphere(vec3(j.at("center")), j.at("radius").get<double>());
  }
  throw std::runtime_error("unknown obstacle kind: " + kind);
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario: " + path);
  json j = json::parse(in);

  Scenario sc;
  maybe(j, "name", sc.name);

  if (auto it = j.find("vehicle"); it != j.end()) {
    const json& v = *it;
    maybe(v, "quad_mass", sc.params.m_q);
    maybe(v, "payload_mass", sc.params.m_l);
    maybe(v, "cable_length", sc.params.l);
    maybe_vec(v, "inertia", sc.params.inertia);
  }
  if (auto it = j.find("limits"); it != j.end()) {
    const json& v = *it;
    maybe(v, "f_min", sc.limits.f_min);
    maybe(v, "f_max", sc.limits.f_max);
    maybe(v, "v_max", sc.limits.v_max);
    maybe(v, "a_max", sc.limits.a_max);
    double tilt_deg = sc.limits.theta_max * 180.0 / M_PI;
    maybe(v, "tilt_max_deg", tilt_deg);
    sc.limits.theta_max = tilt_deg * M_PI / 180.0;
  }
  if (auto it = j.find("weights"); it != j.end()) {
    const json& v = *it;
    maybe(v, "time", sc.weights.time);
    maybe(v, "collision", sc.weights.collision);
  }

  if (auto it = j.find("map"); it != j.end()) {
    const json& m = *it;
    maybe(m, "file", sc.map_file);
    maybe_vec(m, "origin", sc.map_origin);
    maybe_vec(m, "size", sc.map_size);
    maybe(m, "resolution", sc.resolution);
    if (auto o = m.find("obstacles"); o != m.end()) {
      for (const json& p : *o) sc.obstacles.push_back(parse_primitive(p));
    }
  }

  maybe_vec(j, "start", sc.start);
  maybe_vec(j, "goal", sc.goal);
  maybe(j, "trajectory_file", sc.trajectory_file);
  if (auto it = j.find("figure_eight"); it != j.end()) {
    const json& f = *it;
    sc.figure_eight = true;
    maybe(f, "a", sc.fig8_a);
    maybe(f, "b", sc.fig8_b);
    maybe(f, "height", sc.fig8_height);
    maybe(f, "peak_speed", sc.fig8_speed);
  }

  if (auto it = j.find("wind"); it != j.end()) {
    const json& w = *it;
    maybe_vec(w, "base", sc.wind.base);
    maybe_vec(w, "gust_amp", sc.wind.gust_amp);
    maybe(w, "gust_hz", sc.wind.gust_hz);
    maybe(w, "start", sc.wind.start);
  }
  maybe(j, "drag_area_quad", sc.c_da_q);
  maybe(j, "drag_area_payload", sc.c_da_l);
  if (auto it = j.find("attach"); it != j.end()) {
    const json& a = *it;
    maybe(a, "time", sc.attach.time);
    maybe(a, "mass", sc.attach.mass);
    maybe(a, "ramp", sc.attach.ramp);
  }
  if (auto it = j.find("torque_bias"); it != j.end()) {
    const json& b = *it;
    maybe_vec(b, "torque", sc.body_torque_bias);
    maybe(b, "start", sc.torque_bias_start);
  }

  maybe(j, "force_comp", sc.force_comp);
  maybe(j, "use_indi", sc.use_indi);
  maybe(j, "duration", sc.duration);
  maybe(j, "sim_dt", sc.sim_dt);
  maybe(j, "control_every", sc.control_every);
  maybe(j, "acc_noise_sigma", sc.acc_noise_sigma);
  maybe(j, "seed", sc.seed);

  if (sc.sim_dt <= 0.0 || sc.control_every < 1 || sc.duration <= 0.0) {
    throw std::runtime_error("scenario timing must be positive");
  }
  return sc;
}

void save_scenario(const Scenario& sc, const std::string& path) {
  json j;
  j["name"] = sc.name;
  j["vehicle"] = {{"quad_mass", sc.params.m_q},
                  {"payload_mass", sc.params.m_l},
                  {"cable_length", sc.params.l},
                  {"inertia", to_json(sc.params.inertia)}};
  j["limits"] = {{"f_min", sc.limits.f_min},
                 {"f_max", sc.limits.f_max},
                 {"v_max", sc.limits.v_max},
                 {"a_max", sc.limits.a_max},
                 {"tilt_max_deg", sc.limits.theta_max * 180.0 / M_PI}};

  json m;
  if (!sc.map_file.empty()) m["file"] = sc.map_file;
  m["origin"] = to_json(sc.map_origin);
  m["size"] = to_json(sc.map_size);
  m["resolution"] = sc.resolution;
  if (!sc.obstacles.empty()) {
    json arr = json::array();
    for (const Primitive& p : sc.obstacles) {
      if (p.kind == Primitive::Kind::kBox) {
        arr.push_back({{"kind", "box"},
                       {"min", to_json(p.box_min)},
                       {"max", to_json(p.box_max)}});
      } else {
        arr.push_back({{"kind", "sphere"},
                       {"center", to_json(p.center)},
                       {"radius", p.radius}});
      }
    }
    m["obstacles"] = arr;
  }
  j["map"] = m;

  j["start"] = to_json(sc.start);
  j["goal"] = to_json(sc.goal);
  if (!sc.trajectory_file.empty()) j["trajectory_file"] = sc.trajectory_file;
  if (sc.figure_eight) {
    j["figure_eight"] = {{"a", sc.fig8_a},
                         {"b", sc.fig8_b},
                         {"height", sc.fig8_height},
                         {"peak_speed", sc.fig8_speed}};
  }
  if (sc.wind.active()) {
    j["wind"] = {{"base", to_json(sc.wind.base)},
                 {"gust_amp", to_json(sc.wind.gust_amp)},
                 {"gust_hz", sc.wind.gust_hz},
                 {"start", sc.wind.start}};
  }
  if (sc.attach.time >= 0.0) {
    j["attach"] = {{"time", sc.attach.time},
                   {"mass", sc.attach.mass},
                   {"ramp", sc.attach.ramp}};
  }
  if (sc.body_torque_bias.squaredNorm() > 0.0) {
    j["torque_bias"] = {{"torque", to_json(sc.body_torque_bias)},
                        {"start", sc.torque_bias_start}};
  }
  j["force_comp"] = sc.force_comp;
  j["use_indi"] = sc.use_indi;
  j["duration"] = sc.duration;
  j["sim_dt"] = sc.sim_dt;
  j["control_every"] = sc.control_every;
  j["acc_noise_sigma"] = sc.acc_noise_sigma;
  j["seed"] = sc.seed;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario: " + path);
  out << j.dump(2) << "\n";
}

void apply_variant(Scenario& sc, const std::string& variant) {
  if (variant == "plain") {
    sc.force_comp = false;
    sc.use_indi = false;
  } else if (variant == "indi") {
    sc.force_comp = false;
    sc.use_indi = true;
  } else if (variant == "force") {
    sc.force_comp = true;
    sc.use_indi = false;
  } else if (variant == "full") {
    sc.force_comp = true;
    sc.use_indi = true;
  } else {
    throw std::runtime_error("unknown variant: " + variant);
  }
}

}  // namespace slungload
