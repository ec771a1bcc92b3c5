#pragma once

#include <Eigen/Dense>
#include <functional>

namespace slungload {

// Objective callable: fills grad (resized by caller to x.size()) and returns
// the value. Must be deterministic; called repeatedly from one thread.
using Objective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int memory = 8;
  int max_iters = 500;
  double grad_tol = 1e-6;       // sup-norm of the gradient
  double c1 = 1e-4;             // sufficient decrease
  double c2 = 0.9;              // curvature
  int max_linesearch = 60;
  double step_max = 1e10;
};

enum class LbfgsStatus {
  kConverged,
  kMaxIterations,
  kLineSearchFailed,
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::kConverged;
};

LbfgsResult lbfgs_minimize(const Objective& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& opts = {});

// C1 one-sided penalty: zero for x <= 0, cubic blend on (0, mu], slope-one
// linear continuation beyond. Value and first derivative are continuous at
// both junctions.
struct SmoothL1 {
  double value = 0.0;
  double derivative = 0.0;
};
SmoothL1 smooth_l1(double x, double mu = 1e-2);

// Huber loss on the norm of a residual vector, with gradient w.r.t. the
// vector itself: quadratic for ||r|| <= delta, linear outside.
struct HuberEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
};
HuberEval huber(const Eigen::VectorXd& r, double delta);

// Central-difference check of an analytic gradient. Returns the max over
// coordinates of |fd - analytic| / max(1, |fd|).
double grad_check(const Objective& objective, const Eigen::VectorXd& x,
                  double h = 1e-6);

}  // namespace slungload
