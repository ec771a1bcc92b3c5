#include "slungload/esdf.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace slungload {

namespace {

// Large finite sentinel: keeps the envelope intersections finite on rows with
// no sites. Any path through it exceeds the saturation distance by orders of
// magnitude, while genuine squared distances (integer-valued, < 1e7 here) stay
// exact.
constexpr double kInf = 1e20;

// Felzenszwalb-Huttenlocher 1-D squared distance transform: lower envelope of
// the parabolas q -> f[q] + (x-q)^2.
void dt_1d(const double* f, int n, double* d, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Squared distance (voxel units) to the nearest seed voxel, separable passes
// over x, then y, then z.
std::vector<double> dt_3d(const Eigen::Vector3i& dims,
                          const std::vector<double>& seed) {
  const int nx = dims.x(), ny = dims.y(), nz = dims.z();
  std::vector<double> grid = seed;
  const int nmax = std::max({nx, ny, nz});
  std::vector<double> f(nmax), d(nmax), z(nmax + 1);
  std::vector<int> v(nmax);

  const auto idx = [&](int x, int y, int z_) {
    return (static_cast<std::size_t>(z_) * ny + y) * nx + x;
  };
  for (int z_ = 0; z_ < nz; ++z_)
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) f[x] = grid[idx(x, y, z_)];
      dt_1d(f.data(), nx, d.data(), v.data(), z.data());
      for (int x = 0; x < nx; ++x) grid[idx(x, y, z_)] = d[x];
    }
  for (int z_ = 0; z_ < nz; ++z_)
    for (int x = 0; x < nx; ++x) {
      for (int y = 0; y < ny; ++y) f[y] = grid[idx(x, y, z_)];
      dt_1d(f.data(), ny, d.data(), v.data(), z.data());
      for (int y = 0; y < ny; ++y) grid[idx(x, y, z_)] = d[y];
    }
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      for (int z_ = 0; z_ < nz; ++z_) f[z_] = grid[idx(x, y, z_)];
      dt_1d(f.data(), nz, d.data(), v.data(), z.data());
      for (int z_ = 0; z_ < nz; ++z_) grid[idx(x, y, z_)] = d[z_];
    }
  return grid;
}

}  // namespace

EsdfMap build_esdf(const OccupancyGrid& grid, double max_distance) {
  if (grid.cells.size() !=
      static_cast<std::size_t>(grid.dims.x()) * grid.dims.y() * grid.dims.z())
    throw std::invalid_argument("occupancy grid cell count mismatch");

  const std::size_t n = grid.cells.size();
  std::vector<double> to_occ(n), to_free(n);
  for (std::size_t i = 0; i < n; ++i) {
    to_occ[i] = grid.cells[i] ? 0.0 : kInf;
    to_free[i] = grid.cells[i] ? kInf : 0.0;
  }
  to_occ = dt_3d(grid.dims, to_occ);
  to_free = dt_3d(grid.dims, to_free);

  EsdfMap map;
  map.origin_ = grid.origin;
  map.resolution_ = grid.resolution;
  map.dims_ = grid.dims;
  map.max_distance_ = max_distance;
  map.distance_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d_occ =
        std::min(grid.resolution * std::sqrt(to_occ[i]), max_distance);
    const double d_free =
        std::min(grid.resolution * std::sqrt(to_free[i]), max_distance);
    map.distance_[i] = d_occ - d_free;
  }
  return map;
}

EsdfQuery EsdfMap::query(const Eigen::Vector3d& p) const {
  // Continuous coordinates on the voxel-center lattice.
  Eigen::Vector3d pc = (p - origin_) / resolution_ - Eigen::Vector3d::Constant(0.5);
  bool clamped[3];
  for (int a = 0; a < 3; ++a) {
    const double hi = dims_(a) - 1.0;
    clamped[a] = pc(a) < 0.0 || pc(a) > hi;
    pc(a) = std::min(std::max(pc(a), 0.0), hi);
  }
  Eigen::Vector3i i0;
  Eigen::Vector3d t;
  for (int a = 0; a < 3; ++a) {
    i0(a) = std::min(static_cast<int>(pc(a)), std::max(dims_(a) - 2, 0));
    t(a) = pc(a) - i0(a);
  }
  const Eigen::Vector3i i1 = (i0.array() + 1).min(dims_.array() - 1);

  double c[2][2][2];
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx)
        c[dx][dy][dz] = at(dx ? i1.x() : i0.x(), dy ? i1.y() : i0.y(),
                           dz ? i1.z() : i0.z());

  // Collapse z, then y, keeping the partial blends for the gradient.
  double cz[2][2], dz_[2][2];
  for (int dx = 0; dx < 2; ++dx)
    for (int dy = 0; dy < 2; ++dy) {
      cz[dx][dy] = c[dx][dy][0] * (1.0 - t.z()) + c[dx][dy][1] * t.z();
      dz_[dx][dy] = c[dx][dy][1] - c[dx][dy][0];
    }
  double cy[2], dy_[2], czy[2];
  for (int dx = 0; dx < 2; ++dx) {
    cy[dx] = cz[dx][0] * (1.0 - t.y()) + cz[dx][1] * t.y();
    dy_[dx] = cz[dx][1] - cz[dx][0];
    czy[dx] = dz_[dx][0] * (1.0 - t.y()) + dz_[dx][1] * t.y();
  }

  EsdfQuery out;
  out.distance = cy[0] * (1.0 - t.x()) + cy[1] * t.x();
  const double inv_res = 1.0 / resolution_;
  out.gradient.x() = clamped[0] ? 0.0 : (cy[1] - cy[0]) * inv_res;
  out.gradient.y() =
      clamped[1] ? 0.0
                 : (dy_[0] * (1.0 - t.x()) + dy_[1] * t.x()) * inv_res;
  out.gradient.z() =
      clamped[2] ? 0.0
                 : (czy[0] * (1.0 - t.x()) + czy[1] * t.x()) * inv_res;
  return out;
}

Primitive Primitive::box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
  Primitive p;
  p.kind = Kind::kBox;
  p.box_min = lo.cwiseMin(hi);
  p.box_max = lo.cwiseMax(hi);
  return p;
}

Primitive Primitive::sphere(const Eigen::Vector3d& c, double r) {
  Primitive p;
  p.kind = Kind::kSphere;
  p.center = c;
  p.radius = r;
  return p;
}

bool Primitive::contains(const Eigen::Vector3d& p) const {
  if (kind == Kind::kBox)
    return (p.array() >= box_min.array()).all() &&
           (p.array() <= box_max.array()).all();
  return (p - center).norm() <= radius;
}

OccupancyGrid rasterize(const std::vector<Primitive>& primitives,
                        const Eigen::Vector3d& bounds_min,
                        const Eigen::Vector3d& bounds_max, double resolution) {
  if (resolution <= 0.0) throw std::invalid_argument("resolution must be > 0");
  OccupancyGrid grid;
  grid.origin = bounds_min;
  grid.resolution = resolution;
  for (int a = 0; a < 3; ++a)
    grid.dims(a) = std::max(
        1, static_cast<int>(std::ceil((bounds_max(a) - bounds_min(a)) /
                                      resolution - 1e-9)));
  grid.cells.assign(
      static_cast<std::size_t>(grid.dims.x()) * grid.dims.y() * grid.dims.z(),
      0);
  for (int z = 0; z < grid.dims.z(); ++z)
    for (int y = 0; y < grid.dims.y(); ++y)
      for (int x = 0; x < grid.dims.x(); ++x) {
        const Eigen::Vector3d c = grid.center(x, y, z);
        for (const auto& prim : primitives)
          if (prim.contains(c)) {
            grid.cells[grid.index(x, y, z)] = 1;
            break;
          }
      }
  return grid;
}

OccupancyGrid load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "slungload_grid" || version != 1)
    throw std::runtime_error("bad map file header: " + path);
  OccupancyGrid grid;
  std::string key;
  in >> key >> grid.origin.x() >> grid.origin.y() >> grid.origin.z();
  if (key != "origin") throw std::runtime_error("map file: expected origin");
  in >> key >> grid.resolution;
  if (key != "resolution") throw std::runtime_error("map file: expected resolution");
  in >> key >> grid.dims.x() >> grid.dims.y() >> grid.dims.z();
  if (key != "dims") throw std::runtime_error("map file: expected dims");
  in >> key;
  if (key != "data") throw std::runtime_error("map file: expected data");
  const std::size_t n =
      static_cast<std::size_t>(grid.dims.x()) * grid.dims.y() * grid.dims.z();
  grid.cells.reserve(n);
  char ch;
  while (grid.cells.size() < n && in.get(ch)) {
    if (ch == '0') grid.cells.push_back(0);
    else if (ch == '1') grid.cells.push_back(1);
    else if (!std::isspace(static_cast<unsigned char>(ch)))
      throw std::runtime_error("map file: invalid occupancy character");
  }
  if (grid.cells.size() != n)
    throw std::runtime_error("map file: truncated occupancy data");
  return grid;
}

void save_grid(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write map file: " + path);
  out << "slungload_grid 1\n";
  out << "origin " << grid.origin.x() << " " << grid.origin.y() << " "
      << grid.origin.z() << "\n";
  out << "resolution " << grid.resolution << "\n";
  out << "dims " << grid.dims.x() << " " << grid.dims.y() << " "
      << grid.dims.z() << "\n";
  out << "data\n";
  for (int z = 0; z < grid.dims.z(); ++z)
    for (int y = 0; y < grid.dims.y(); ++y) {
      for (int x = 0; x < grid.dims.x(); ++x)
        out << (grid.occupied(x, y, z) ? '1' : '0');
      out << "\n";
    }
}

}  // namespace slungload
