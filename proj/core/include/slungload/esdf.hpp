#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace slungload {

struct OccupancyGrid {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  double resolution = 0.1;
  Eigen::Vector3i dims = Eigen::Vector3i::Ones();
  std::vector<std::uint8_t> cells;  // row-major, x fastest: (z*ny + y)*nx + x

  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims.y() + y) * dims.x() + x;
  }
  bool occupied(int x, int y, int z) const { return cells[index(x, y, z)] != 0; }
  Eigen::Vector3d center(int x, int y, int z) const {
    return origin + resolution * Eigen::Vector3d(x + 0.5, y + 0.5, z + 0.5);
  }
  bool inside(const Eigen::Vector3i& v) const {
    return (v.array() >= 0).all() && (v.array() < dims.array()).all();
  }
  Eigen::Vector3i voxel_of(const Eigen::Vector3d& p) const {
    return ((p - origin) / resolution).array().floor().cast<int>();
  }
};

struct EsdfQuery {
  double distance = 0.0;
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
};

// Signed Euclidean distance field over voxel centers: positive in free space,
// negative inside obstacles, saturated at +-max_distance. Immutable after
// build; queries are safe from any number of threads.
class EsdfMap {
 public:
  static constexpr double kDefaultMaxDistance = 10.0;

  EsdfMap() = default;

  const Eigen::Vector3d& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Eigen::Vector3i& dims() const { return dims_; }
  double max_distance() const { return max_distance_; }

  double at(int x, int y, int z) const {
    return distance_[(static_cast<std::size_t>(z) * dims_.y() + y) * dims_.x() +
                     x];
  }

  // Trilinear distance + analytic gradient of the blend. Points outside the
  // voxel-center lattice are clamped; clamped axes report zero gradient.
  EsdfQuery query(const Eigen::Vector3d& p) const;

  friend EsdfMap build_esdf(const OccupancyGrid& grid, double max_distance);

 private:
  Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
  double resolution_ = 0.1;
  Eigen::Vector3i dims_ = Eigen::Vector3i::Ones();
  double max_distance_ = kDefaultMaxDistance;
  std::vector<double> distance_;
};

EsdfMap build_esdf(const OccupancyGrid& grid,
                   double max_distance = EsdfMap::kDefaultMaxDistance);

struct Primitive {
  enum class Kind { kBox, kSphere } kind = Kind::kBox;
  Eigen::Vector3d box_min = Eigen::Vector3d::Zero();  // kBox
  Eigen::Vector3d box_max = Eigen::Vector3d::Zero();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();   // kSphere
  double radius = 0.0;

  static Primitive box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi);
  static Primitive sphere(const Eigen::Vector3d& c, double r);
  bool contains(const Eigen::Vector3d& p) const;
};

OccupancyGrid rasterize(const std::vector<Primitive>& primitives,
                        const Eigen::Vector3d& bounds_min,
                        const Eigen::Vector3d& bounds_max, double resolution);

// Text map file: header (origin, resolution, dims) + row-major 0/1 rows.
OccupancyGrid load_grid(const std::string& path);
void save_grid(const OccupancyGrid& grid, const std::string& path);

}  // namespace slungload
