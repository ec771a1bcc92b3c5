#include "slungload/minco.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace slungload {

void BandedLU::resize(int n, int lower, int upper) {
  n_ = n;
  lower_ = lower;
  upper_ = upper;
  width_ = lower + upper + 1;
  row_.assign(n, std::vector<double>(2 * lower + upper + 1, 0.0));
  mult_.assign(n, std::vector<double>(lower, 0.0));
  piv_.assign(n, 0);
}

void BandedLU::reset() {
  for (auto& r : row_) std::fill(r.begin(), r.end(), 0.0);
  for (auto& m : mult_) std::fill(m.begin(), m.end(), 0.0);
  std::fill(piv_.begin(), piv_.end(), 0);
}

bool BandedLU::factorize() {
  const int n = n_;
  for (int j = 0; j < n; ++j) {
    const int iend = std::min(j + lower_, n - 1);
    int p = j;
    double best = std::abs(at(j, j));
    for (int i = j + 1; i <= iend; ++i) {
      const double v = std::abs(at(i, j));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (!(best > 1e-300)) return false;
    piv_[j] = p;
    if (p != j) {
      const int cend = std::min(j + upper_ + lower_, n - 1);
      for (int c = j; c <= cend; ++c) std::swap((*this)(j, c), (*this)(p, c));
    }
    const double ujj = at(j, j);
    for (int i = j + 1; i <= iend; ++i) {
      const double m = at(i, j) / ujj;
      mult_[j][i - j - 1] = m;
      if (m != 0.0) {
        const int cend = std::min(j + upper_ + lower_, n - 1);
        for (int c = j + 1; c <= cend; ++c) (*this)(i, c) -= m * at(j, c);
      }
      (*this)(i, j) = 0.0;
    }
  }
  return true;
}

namespace {

// beta(t) and its derivatives for the degree-7 basis [1, t, ..., t^7].
void basis_row(double t, int order, double* out) {
  static const double fact[8][8] = {
      // fact[order][j] = j!/(j-order)! (zero when j < order)
      {1, 1, 1, 1, 1, 1, 1, 1},
      {0, 1, 2, 3, 4, 5, 6, 7},
      {0, 0, 2, 6, 12, 20, 30, 42},
      {0, 0, 0, 6, 24, 60, 120, 210},
      {0, 0, 0, 0, 24, 120, 360, 840},
      {0, 0, 0, 0, 0, 120, 720, 2520},
      {0, 0, 0, 0, 0, 0, 720, 5040},
      {0, 0, 0, 0, 0, 0, 0, 5040}};
  double tn = 1.0;
  for (int j = 0; j < 8; ++j) out[j] = 0.0;
  for (int j = order; j < 8; ++j) {
    out[j] = fact[order][j] * tn;
    tn *= t;
  }
}

}  // namespace

int PiecewisePoly::piece_at(double t, double* local) const {
  const int m = pieces();
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    if (t < acc + durations(i) || i == m - 1) {
      *local = std::min(std::max(t - acc, 0.0), durations(i));
      return i;
    }
    acc += durations(i);
  }
  *local = 0.0;
  return 0;
}

Eigen::Vector3d PiecewisePoly::evaluate(double t, int order,
                                        bool* clamped) const {
  const double total = total_time();
  bool clip = false;
  if (t < 0.0) {
    t = 0.0;
    clip = true;
  } else if (t > total) {
    t = total;
    clip = true;
  }
  if (clamped) *clamped = clip;
  double local = 0.0;
  const int i = piece_at(t, &local);
  return piece_eval(i, local, order);
}

Eigen::Vector3d PiecewisePoly::piece_eval(int piece, double local,
                                          int order) const {
  if (order > 7) return Eigen::Vector3d::Zero();
  double beta[8];
  basis_row(local, order, beta);
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int j = order; j < 8; ++j)
    out += beta[j] * coeffs.row(8 * piece + j).transpose();
  return out;
}

double PiecewisePoly::max_derivative_norm(int order, double dt) const {
  double worst = 0.0;
  const double total = total_time();
  for (double t = 0.0; t <= total + 1e-12; t += dt)
    worst = std::max(worst, evaluate(std::min(t, total), order).norm());
  return worst;
}

void MincoSpline::setup(const BoundaryCond& head, const BoundaryCond& tail,
                        int pieces) {
  if (pieces < 1) throw std::invalid_argument("spline needs at least 1 piece");
  m_ = pieces;
  head_ = head;
  tail_ = tail;
  a_.resize(8 * m_, 8, 8);
  poly_.coeffs.resize(8 * m_, 3);
  poly_.durations.resize(m_);
  poly_.head = head;
  poly_.tail = tail;
  waypoints_.resize(std::max(m_ - 1, 0), 3);
}

void MincoSpline::set_conditions(const Eigen::MatrixX3d& waypoints,
                                 const Eigen::VectorXd& durations) {
  if (waypoints.rows() != m_ - 1)
    throw std::invalid_argument("waypoint count must be pieces-1");
  if (durations.size() != m_ || (durations.array() <= 0.0).any())
    throw std::invalid_argument("durations must be positive, one per piece");
  waypoints_ = waypoints;
  poly_.durations = durations;

  a_.reset();
  Eigen::MatrixX3d b = Eigen::MatrixX3d::Zero(8 * m_, 3);

  // Head: position/velocity/acceleration/jerk at t=0.
  a_(0, 0) = 1.0;
  a_(1, 1) = 1.0;
  a_(2, 2) = 2.0;
  a_(3, 3) = 6.0;
  b.row(0) = head_.pos.transpose();
  b.row(1) = head_.vel.transpose();
  b.row(2) = head_.acc.transpose();
  b.row(3) = head_.jerk.transpose();

  double beta[8];
  for (int i = 0; i < m_ - 1; ++i) {
    const double t = durations(i);
    const int r = 8 * i;
    // Continuity of orders 4..6 across the junction (leading coefficients of
    // the next piece give the derivative at its local t=0).
    basis_row(t, 4, beta);
    for (int j = 4; j < 8; ++j) a_(r + 4, r + j) = beta[j];
    a_(r + 4, r + 12) = -24.0;
    basis_row(t, 5, beta);
    for (int j = 5; j < 8; ++j) a_(r + 5, r + j) = beta[j];
    a_(r + 5, r + 13) = -120.0;
    basis_row(t, 6, beta);
    for (int j = 6; j < 8; ++j) a_(r + 6, r + j) = beta[j];
    a_(r + 6, r + 14) = -720.0;
    // Waypoint interpolation, then continuity of orders 0..3.
    basis_row(t, 0, beta);
    for (int j = 0; j < 8; ++j) a_(r + 7, r + j) = beta[j];
    b.row(r + 7) = waypoints.row(i);
    for (int j = 0; j < 8; ++j) a_(r + 8, r + j) = beta[j];
    a_(r + 8, r + 8) = -1.0;
    basis_row(t, 1, beta);
    for (int j = 1; j < 8; ++j) a_(r + 9, r + j) = beta[j];
    a_(r + 9, r + 9) = -1.0;
    basis_row(t, 2, beta);
    for (int j = 2; j < 8; ++j) a_(r + 10, r + j) = beta[j];
    a_(r + 10, r + 10) = -2.0;
    basis_row(t, 3, beta);
    for (int j = 3; j < 8; ++j) a_(r + 11, r + j) = beta[j];
    a_(r + 11, r + 11) = -6.0;
  }

  // Tail conditions on the last piece.
  const double tl = durations(m_ - 1);
  const int rl = 8 * (m_ - 1);
  for (int order = 0; order < 4; ++order) {
    basis_row(tl, order, beta);
    for (int j = order; j < 8; ++j) a_(8 * m_ - 4 + order, rl + j) = beta[j];
  }
  b.row(8 * m_ - 4) = tail_.pos.transpose();
  b.row(8 * m_ - 3) = tail_.vel.transpose();
  b.row(8 * m_ - 2) = tail_.acc.transpose();
  b.row(8 * m_ - 1) = tail_.jerk.transpose();

  if (!a_.factorize())
    throw std::runtime_error("spline system singular (check durations)");
  a_.solve(b);
  poly_.coeffs = b;
}

double MincoSpline::energy(const Eigen::Vector3d& q) const {
  double total = 0.0;
  for (int i = 0; i < m_; ++i) {
    const double t1 = poly_.durations(i);
    const double t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1,
                 t6 = t5 * t1, t7 = t6 * t1;
    const auto wdot = [&](int a, int b) {
      return (poly_.coeffs.row(8 * i + a).transpose().array() *
              poly_.coeffs.row(8 * i + b).transpose().array() * q.array())
          .sum();
    };
    total += 576.0 * wdot(4, 4) * t1 + 2880.0 * wdot(4, 5) * t2 +
             4800.0 * wdot(5, 5) * t3 + 5760.0 * wdot(4, 6) * t3 +
             21600.0 * wdot(5, 6) * t4 + 10080.0 * wdot(4, 7) * t4 +
             25920.0 * wdot(6, 6) * t5 + 40320.0 * wdot(5, 7) * t5 +
             100800.0 * wdot(6, 7) * t6 + 100800.0 * wdot(7, 7) * t7;
  }
  return total;
}

void MincoSpline::energy_grads(const Eigen::Vector3d& q, Eigen::MatrixX3d& gd_c,
                               Eigen::VectorXd& gd_t) const {
  gd_c.setZero(8 * m_, 3);
  gd_t.setZero(m_);
  for (int i = 0; i < m_; ++i) {
    const double t1 = poly_.durations(i);
    const double t2 = t1 * t1, t3 = t2 * t1, t4 = t3 * t1, t5 = t4 * t1,
                 t6 = t5 * t1, t7 = t6 * t1;
    const auto c = [&](int a) {
      return poly_.coeffs.row(8 * i + a).transpose();
    };
    const auto wdot = [&](int a, int b) {
      return (poly_.coeffs.row(8 * i + a).transpose().array() *
              poly_.coeffs.row(8 * i + b).transpose().array() * q.array())
          .sum();
    };
    const Eigen::Array3d qa = q.array();
    gd_c.row(8 * i + 4) =
        ((1152.0 * c(4) * t1 + 2880.0 * c(5) * t2 + 5760.0 * c(6) * t3 +
          10080.0 * c(7) * t4)
             .array() *
         qa)
            .matrix()
            .transpose();
    gd_c.row(8 * i + 5) =
        ((2880.0 * c(4) * t2 + 9600.0 * c(5) * t3 + 21600.0 * c(6) * t4 +
          40320.0 * c(7) * t5)
             .array() *
         qa)
            .matrix()
            .transpose();
    gd_c.row(8 * i + 6) =
        ((5760.0 * c(4) * t3 + 21600.0 * c(5) * t4 + 51840.0 * c(6) * t5 +
          100800.0 * c(7) * t6)
             .array() *
         qa)
            .matrix()
            .transpose();
    gd_c.row(8 * i + 7) =
        ((10080.0 * c(4) * t4 + 40320.0 * c(5) * t5 + 100800.0 * c(6) * t6 +
          201600.0 * c(7) * t7)
             .array() *
         qa)
            .matrix()
            .transpose();
    gd_t(i) = 576.0 * wdot(4, 4) + 5760.0 * wdot(4, 5) * t1 +
              14400.0 * wdot(5, 5) * t2 + 17280.0 * wdot(4, 6) * t2 +
              86400.0 * wdot(5, 6) * t3 + 40320.0 * wdot(4, 7) * t3 +
              129600.0 * wdot(6, 6) * t4 + 201600.0 * wdot(5, 7) * t4 +
              604800.0 * wdot(6, 7) * t5 + 705600.0 * wdot(7, 7) * t6;
  }
}

void MincoSpline::propagate_gradients(const Eigen::MatrixX3d& dl_dc,
                                      const Eigen::VectorXd& dl_dt_direct,
                                      Eigen::MatrixX3d& dl_dp,
                                      Eigen::VectorXd& dl_dt) const {
  Eigen::MatrixX3d adj = dl_dc;
  a_.solve_transpose(adj);

  dl_dp.setZero(std::max(m_ - 1, 0), 3);
  dl_dt = dl_dt_direct;
  if (dl_dt.size() != m_) dl_dt.setZero(m_);

  // Through-A terms: dL/dT_i -= adj^T (dA/dT_i) c, assembled row by row from
  // the derivative of each junction/tail condition w.r.t. the piece duration.
  for (int i = 0; i < m_ - 1; ++i) {
    dl_dp.row(i) = adj.row(8 * i + 7);
    const double t = poly_.durations(i);
    const Eigen::Vector3d vel = poly_.piece_eval(i, t, 1);
    const Eigen::Vector3d acc = poly_.piece_eval(i, t, 2);
    const Eigen::Vector3d jer = poly_.piece_eval(i, t, 3);
    const Eigen::Vector3d sna = poly_.piece_eval(i, t, 4);
    const Eigen::Vector3d cra = poly_.piece_eval(i, t, 5);
    const Eigen::Vector3d pop = poly_.piece_eval(i, t, 6);
    const Eigen::Vector3d hep = poly_.piece_eval(i, t, 7);
    const int r = 8 * i;
    dl_dt(i) -= adj.row(r + 4).dot(cra) + adj.row(r + 5).dot(pop) +
                adj.row(r + 6).dot(hep) + adj.row(r + 7).dot(vel) +
                adj.row(r + 8).dot(vel) + adj.row(r + 9).dot(acc) +
                adj.row(r + 10).dot(jer) + adj.row(r + 11).dot(sna);
  }
  {
    const int i = m_ - 1;
    const double t = poly_.durations(i);
    const Eigen::Vector3d vel = poly_.piece_eval(i, t, 1);
    const Eigen::Vector3d acc = poly_.piece_eval(i, t, 2);
    const Eigen::Vector3d jer = poly_.piece_eval(i, t, 3);
    const Eigen::Vector3d sna = poly_.piece_eval(i, t, 4);
    const int r = 8 * m_ - 4;
    dl_dt(i) -= adj.row(r + 0).dot(vel) + adj.row(r + 1).dot(acc) +
                adj.row(r + 2).dot(jer) + adj.row(r + 3).dot(sna);
  }
}

PiecewisePoly minco_construct(const BoundaryCond& head, const BoundaryCond& tail,
                              const Eigen::MatrixX3d& waypoints,
                              const Eigen::VectorXd& durations) {
  MincoSpline spline;
  spline.setup(head, tail, static_cast<int>(durations.size()));
  spline.set_conditions(waypoints, durations);
  return spline.poly();
}

Eigen::Matrix<double, 8, 1> poly_basis(double t, int order) {
  Eigen::Matrix<double, 8, 1> b;
  basis_row(t, order, b.data());
  return b;
}

double virtual_to_duration(double sigma) {
  if (sigma >= 0.0) return 0.5 * sigma * sigma + sigma + 1.0;
  const double den = 0.5 * sigma * sigma - sigma + 1.0;
  return 1.0 / den;
}

double virtual_to_duration_jacobian(double sigma) {
  if (sigma >= 0.0) return sigma + 1.0;
  const double den = 0.5 * sigma * sigma - sigma + 1.0;
  return (1.0 - sigma) / (den * den);
}

double duration_to_virtual(double t) {
  return t > 1.0 ? std::sqrt(2.0 * t - 1.0) - 1.0
                 : 1.0 - std::sqrt(2.0 / t - 1.0);
}

void save_trajectory(const PiecewisePoly& poly, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
  out << "slungload_traj 1\n";
  out << "pieces " << poly.pieces() << "\n";
  out << std::setprecision(17);
  for (int i = 0; i < poly.pieces(); ++i) {
    out << i << " " << poly.durations(i);
    for (int d = 0; d < 3; ++d)
      for (int j = 0; j < 8; ++j) out << " " << poly.coeffs(8 * i + j, d);
    out << "\n";
  }
}

PiecewisePoly load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  std::string magic;
  int version = 0, m = 0;
  std::string key;
  in >> magic >> version >> key >> m;
  if (magic != "slungload_traj" || version != 1 || key != "pieces" || m < 1)
    throw std::runtime_error("bad trajectory file header: " + path);
  PiecewisePoly poly;
  poly.coeffs.resize(8 * m, 3);
  poly.durations.resize(m);
  for (int i = 0; i < m; ++i) {
    int idx;
    in >> idx >> poly.durations(i);
    if (!in || idx != i)
      throw std::runtime_error("trajectory file: bad piece row");
    for (int d = 0; d < 3; ++d)
      for (int j = 0; j < 8; ++j) in >> poly.coeffs(8 * i + j, d);
  }
  if (!in) throw std::runtime_error("trajectory file: truncated");
  poly.head.pos = poly.evaluate(0.0, 0);
  poly.head.vel = poly.evaluate(0.0, 1);
  poly.head.acc = poly.evaluate(0.0, 2);
  poly.head.jerk = poly.evaluate(0.0, 3);
  const double tt = poly.total_time();
  poly.tail.pos = poly.evaluate(tt, 0);
  poly.tail.vel = poly.evaluate(tt, 1);
  poly.tail.acc = poly.evaluate(tt, 2);
  poly.tail.jerk = poly.evaluate(tt, 3);
  return poly;
}

}  // namespace slungload
