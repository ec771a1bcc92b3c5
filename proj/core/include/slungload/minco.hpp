#pragma once

#include <Eigen/Dense>
#include <string>

#include "slungload/banded.hpp"

namespace slungload {

struct BoundaryCond {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d vel = Eigen::Vector3d::Zero();
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  Eigen::Vector3d jerk = Eigen::Vector3d::Zero();

  static BoundaryCond rest(const Eigen::Vector3d& p) {
    BoundaryCond b;
    b.pos = p;
    return b;
  }
};

// Degree-7 3-D piecewise polynomial; piece i owns coefficient rows
// 8i..8i+7 over the basis [1, t, ..., t^7] in piece-local time.
struct PiecewisePoly {
  Eigen::MatrixX3d coeffs;
  Eigen::VectorXd durations;
  BoundaryCond head, tail;

  int pieces() const { return static_cast<int>(durations.size()); }
  double total_time() const { return durations.sum(); }

  // Piece lookup by cumulative time, right-continuous at junctions.
  int piece_at(double t, double* local) const;

  // Derivative of the requested order (0..7); t outside [0, total] clamps to
  // the boundary and sets *clamped.
  Eigen::Vector3d evaluate(double t, int order, bool* clamped = nullptr) const;

  Eigen::Vector3d piece_eval(int piece, double local, int order) const;

  double max_derivative_norm(int order, double dt = 0.01) const;
};

// Minimum-snap spline through interior waypoints: the unique C^6 degree-7
// interpolant, solved as one banded 8M x 8M system per dimension. Keeps the
// factorization around for the adjoint (gradient) pass.
class MincoSpline {
 public:
  void setup(const BoundaryCond& head, const BoundaryCond& tail, int pieces);

  // Assemble + factorize + solve for the coefficients. waypoints: (M-1) x 3.
  void set_conditions(const Eigen::MatrixX3d& waypoints,
                      const Eigen::VectorXd& durations);

  const PiecewisePoly& poly() const { return poly_; }
  int pieces() const { return m_; }

  // Integral of the Q-weighted squared snap (Q diagonal), plus its analytic
  // gradients w.r.t. coefficients and durations.
  double energy(const Eigen::Vector3d& q = Eigen::Vector3d::Ones()) const;
  void energy_grads(const Eigen::Vector3d& q, Eigen::MatrixX3d& gd_c,
                    Eigen::VectorXd& gd_t) const;

  // Back-propagate an arbitrary cost gradient on (coefficients, durations)
  // to (waypoints, durations) through the constructor's linear map.
  void propagate_gradients(const Eigen::MatrixX3d& dl_dc,
                           const Eigen::VectorXd& dl_dt_direct,
                           Eigen::MatrixX3d& dl_dp,
                           Eigen::VectorXd& dl_dt) const;

 private:
  int m_ = 0;
  BoundaryCond head_, tail_;
  BandedLU a_;
  PiecewisePoly poly_;
  Eigen::MatrixX3d waypoints_;
};

PiecewisePoly minco_construct(const BoundaryCond& head, const BoundaryCond& tail,
                              const Eigen::MatrixX3d& waypoints,
                              const Eigen::VectorXd& durations);

// Monomial basis [1, t, ..., t^7] differentiated `order` times, as a column
// for outer-product gradient assembly.
Eigen::Matrix<double, 8, 1> poly_basis(double t, int order);

// Unconstrained virtual time: C^1 bijection R -> R+, quadratic growth above
// one, harmonic decay below, T(0) = 1.
double virtual_to_duration(double sigma);
double virtual_to_duration_jacobian(double sigma);
double duration_to_virtual(double t);

// Trajectory interchange file: one text row per piece (index, duration, 24
// coefficients x-then-y-then-z).
void save_trajectory(const PiecewisePoly& poly, const std::string& path);
PiecewisePoly load_trajectory(const std::string& path);

}  // namespace slungload
