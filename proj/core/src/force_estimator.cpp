#include "slungload/force_estimator.hpp"

#include <cmath>

namespace slungload {

void decompose_along_cable(const Eigen::Vector3d& f, const Eigen::Vector3d& rho,
                           Eigen::Vector3d& parallel,
                           Eigen::Vector3d& perpendicular) {
  parallel = f.dot(rho) * rho;
  perpendicular = f - parallel;
}

ForceEstimator::ForceEstimator(const SystemParams& params,
                               const EstimatorConfig& cfg)
    : params_(params), cfg_(cfg) {}

bool ForceEstimator::push(const ForceMeasurement& m) {
  const bool finite = m.acc_q.allFinite() && m.acc_l.allFinite() &&
                      m.rho.allFinite() && m.thrust_vec.allFinite() &&
                      std::isfinite(m.stamp);
  if (!finite || m.stamp <= last_stamp_) {
    ++rejected_;
    return false;
  }
  last_stamp_ = m.stamp;
  const bool full = static_cast<int>(window_.size()) >= cfg_.window;
  window_.push_back(m);
  if (full) window_.pop_front();

  // Keep the warm start aligned with the window: slide one sample, seed the
  // newest from the previous newest.
  const int w = static_cast<int>(window_.size());
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(6 * w);
  if (warm_.size() > 0) {
    const int prev = static_cast<int>(warm_.size()) / 6;
    if (full) {
      warm.head(6 * (prev - 1)) = warm_.tail(6 * (prev - 1));
      warm.tail(6) = warm_.tail(6);
    } else {
      warm.head(6 * prev) = warm_;
      warm.tail(6) = warm_.tail(6);
    }
  }
  warm_ = warm;
  return true;
}

double ForceEstimator::objective(const Eigen::VectorXd& x,
                                 Eigen::VectorXd& grad) const {
  const int w = static_cast<int>(window_.size());
  grad.setZero(6 * w);
  double cost = 0.0;
  const Eigen::Vector3d gvec(0.0, 0.0, params_.g);

  Eigen::Vector3d mean_q = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_l = Eigen::Vector3d::Zero();
  for (int i = 0; i < w; ++i) {
    mean_q += x.segment<3>(6 * i);
    mean_l += x.segment<3>(6 * i + 3);
  }
  mean_q /= w;
  mean_l /= w;

  Eigen::Vector3d reg_sum_q = Eigen::Vector3d::Zero();
  Eigen::Vector3d reg_sum_l = Eigen::Vector3d::Zero();

  for (int i = 0; i < w; ++i) {
    const ForceMeasurement& m = window_[i];
    const Eigen::Vector3d f_q = x.segment<3>(6 * i);
    const Eigen::Vector3d f_l = x.segment<3>(6 * i + 3);

    // Whole-system momentum balance.
    const Eigen::Vector3d r1 = f_q + f_l + m.thrust_vec -
                               params_.m_q * (gvec + m.acc_q) -
                               params_.m_l * (gvec + m.acc_l);
    const HuberEval h1 = huber(r1, cfg_.huber_delta);
    cost += h1.value;
    grad.segment<3>(6 * i) += h1.gradient;
    grad.segment<3>(6 * i + 3) += h1.gradient;

    // Quadrotor balance with the (unknown-tension) cable axis projected out.
    const Eigen::Vector3d rhs =
        m.thrust_vec - params_.m_q * (gvec + m.acc_q);
    const Eigen::Vector3d r2 = m.rho.cross(f_q) - m.rho.cross(rhs);
    const HuberEval h2 = huber(r2, cfg_.huber_delta);
    cost += h2.value;
    grad.segment<3>(6 * i) += Eigen::Vector3d(h2.gradient.head<3>()).cross(m.rho);

    // Gauge: the payload force carries no along-cable component.
    const Eigen::VectorXd r3 = Eigen::VectorXd::Constant(1, f_l.dot(m.rho));
    const HuberEval h3 = huber(r3, cfg_.huber_delta);
    cost += h3.value;
    grad.segment<3>(6 * i + 3) += h3.gradient(0) * m.rho;

    // Spread regularization around the (current-iterate) window means.
    const HuberEval hq = huber(f_q - mean_q, cfg_.huber_delta);
    const HuberEval hl = huber(f_l - mean_l, cfg_.huber_delta);
    cost += cfg_.k_reg * (hq.value + hl.value);
    grad.segment<3>(6 * i) += cfg_.k_reg * hq.gradient;
    grad.segment<3>(6 * i + 3) += cfg_.k_reg * hl.gradient;
    reg_sum_q += hq.gradient.head<3>();
    reg_sum_l += hl.gradient.head<3>();
  }

  // The means move with every sample: each spread term leaks -1/W of its
  // gradient into all samples.
  for (int i = 0; i < w; ++i) {
    grad.segment<3>(6 * i) -= cfg_.k_reg / w * reg_sum_q;
    grad.segment<3>(6 * i + 3) -= cfg_.k_reg / w * reg_sum_l;
  }
  return cost;
}

ForceEstimate ForceEstimator::estimate() {
  const int w = static_cast<int>(window_.size());
  if (w == 0) {
    ForceEstimate e = last_;
    e.stale = true;
    return e;
  }
  const auto fn = [this](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return objective(x, g);
  };
  const LbfgsResult res = lbfgs_minimize(fn, warm_, cfg_.lbfgs);
  if (!res.x.allFinite()) {
    ForceEstimate e = has_last_ ? last_ : ForceEstimate{};
    e.stale = true;
    return e;
  }
  warm_ = res.x;

  ForceEstimate e;
  for (int i = 0; i < w; ++i) {
    e.f_q_samples.push_back(res.x.segment<3>(6 * i));
    e.f_l_samples.push_back(res.x.segment<3>(6 * i + 3));
    e.f_q += e.f_q_samples.back();
    e.f_l += e.f_l_samples.back();
  }
  e.f_q /= w;
  e.f_l /= w;

  const Eigen::Vector3d gvec(0.0, 0.0, params_.g);
  double sq = 0.0;
  for (int i = 0; i < w; ++i) {
    const ForceMeasurement& m = window_[i];
    const Eigen::Vector3d f_q = e.f_q_samples[i];
    const Eigen::Vector3d f_l = e.f_l_samples[i];
    sq += (f_q + f_l + m.thrust_vec - params_.m_q * (gvec + m.acc_q) -
           params_.m_l * (gvec + m.acc_l))
              .squaredNorm();
    sq += (m.rho.cross(f_q) -
           m.rho.cross(m.thrust_vec - params_.m_q * (gvec + m.acc_q)))
              .squaredNorm();
    sq += f_l.dot(m.rho) * f_l.dot(m.rho);
  }
  e.residual_norm = std::sqrt(sq / (7.0 * w));
  last_ = e;
  has_last_ = true;
  return e;
}

}  // namespace slungload
