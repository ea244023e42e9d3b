#pragma once

// Krylov-subspace propagation psi(t) = exp(-i A t) psi(0) for sparse, possibly
// non-Hermitian A.
//
// Each step builds an Arnoldi basis V_m of K_m(A, psi) and evaluates
// psi(t + s) ~ beta V_m exp(-i s H_m) e_1 for any s inside the step. The local
// error is estimated as beta h_{m+1,m} |e_m^T phi_1(-i s H_m) e_1| s, read off
// the exponential of the augmented matrix [[H_m, 0], [h_{m+1,m} e_m^T, 0]].

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <string>

#include "wqed/errors.hpp"

namespace wqed {

struct KrylovOptions {
  int max_dim = 30;
  /// Local error per step relative to the norm of the step's initial state.
  double tolerance = 1e-8;
  /// Steps below this are treated as integrator failure.
  double min_step = 1e-12;
};

class KrylovSpace {
 public:
  /// apply(in, out) must write A * in into out.
  template <class Apply>
  void build(Apply&& apply, const Eigen::VectorXcd& v, int max_dim) {
    const auto n = v.size();
    beta_ = v.norm();
    m_ = 0;
    exact_ = true;
    h_next_ = 0.0;
    if (beta_ == 0.0) return;
    const int mmax = static_cast<int>(std::min<Eigen::Index>(max_dim, n));
    basis_.resize(n, mmax + 1);
    hess_ = Eigen::MatrixXcd::Zero(mmax + 1, mmax);
    basis_.col(0) = v / beta_;
    Eigen::VectorXcd w(n);
    double scale = 0.0;
    for (int j = 0; j < mmax; ++j) {
      apply(basis_.col(j), w);
      // Modified Gram-Schmidt, twice for stability.
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= j; ++i) {
          const std::complex<double> h = basis_.col(i).dot(w);
          hess_(i, j) += h;
          w.noalias() -= h * basis_.col(i);
        }
      }
      const double h = w.norm();
      scale = std::max(scale, hess_.col(j).head(j + 1).cwiseAbs().maxCoeff());
      m_ = j + 1;
      if (h <= 1e-13 * std::max(1.0, scale)) {
        // Invariant subspace reached: the projection is exact.
        exact_ = true;
        h_next_ = 0.0;
        return;
      }
      hess_(j + 1, j) = h;
      basis_.col(j + 1) = w / h;
    }
    exact_ = false;
    h_next_ = std::abs(hess_(m_, m_ - 1));
  }

  int dim() const noexcept { return m_; }
  double beta() const noexcept { return beta_; }
  bool exact() const noexcept { return exact_; }

  /// Small-space solution beta exp(-i s H_m) e_1 and its error estimate.
  void evaluate(double s, Eigen::VectorXcd& coeffs, double& error) const {
    coeffs = Eigen::VectorXcd::Zero(m_);
    error = 0.0;
    if (m_ == 0) return;
    Eigen::MatrixXcd aug = Eigen::MatrixXcd::Zero(m_ + 1, m_ + 1);
    aug.topLeftCorner(m_, m_) = hess_.topLeftCorner(m_, m_);
    if (!exact_) aug(m_, m_ - 1) = h_next_;
    aug *= std::complex<double>(0.0, -s);
    const Eigen::MatrixXcd e = aug.exp();
    coeffs = beta_ * e.col(0).head(m_);
    error = exact_ ? 0.0 : beta_ * std::abs(e(m_, 0));
  }

  Eigen::VectorXcd coefficients(double s) const {
    Eigen::VectorXcd c;
    double err;
    evaluate(s, c, err);
    return c;
  }

  void reconstruct(const Eigen::VectorXcd& coeffs, Eigen::VectorXcd& out) const {
    if (m_ == 0) {
      out.setZero(basis_.rows() > 0 ? basis_.rows() : out.size());
      return;
    }
    out.noalias() = basis_.leftCols(m_) * coeffs;
  }

 private:
  Eigen::MatrixXcd basis_;
  Eigen::MatrixXcd hess_;
  int m_ = 0;
  double beta_ = 0.0;
  double h_next_ = 0.0;
  bool exact_ = true;
};

/// Adaptive stepper around KrylovSpace. Typical loop:
///   double tau = stepper.begin_step(psi, remaining);
///   ... stepper.state_at(s, out) for s in [0, tau] ...
///   stepper.state_at(tau, psi);
template <class Apply>
class KrylovStepper {
 public:
  KrylovStepper(Apply apply, KrylovOptions opts) : apply_(std::move(apply)), opts_(opts) {}

  /// Builds the space at psi and returns the accepted step length, at most max_step.
  double begin_step(const Eigen::VectorXcd& psi, double max_step) {
    space_.build(apply_, psi, opts_.max_dim);
    start_size_ = psi.size();
    if (space_.exact() || space_.beta() == 0.0) {
      guess_ = std::max(guess_, max_step);
      return max_step;
    }
    const double tol = opts_.tolerance * space_.beta();
    double tau = std::min(max_step, guess_);
    Eigen::VectorXcd c;
    double err = 0.0;
    const double order = static_cast<double>(space_.dim());
    for (int it = 0; it < 200; ++it) {
      space_.evaluate(tau, c, err);
      if (err <= tol) break;
      tau *= std::clamp(0.9 * std::pow(tol / err, 1.0 / order), 0.1, 0.9);
      if (tau < opts_.min_step)
        throw NumericalError("Krylov step size underflow (tau=" + std::to_string(tau) + ", err=" +
                             std::to_string(err) + ")");
    }
    const double grow = err > 0.0 ? std::clamp(0.9 * std::pow(tol / err, 1.0 / order), 1.0, 2.0) : 2.0;
    guess_ = tau * grow;
    return tau;
  }

  void state_at(double s, Eigen::VectorXcd& out) const {
    out.resize(start_size_);
    space_.reconstruct(space_.coefficients(s), out);
  }

  /// ||psi(t + s)|| from the small space alone (V_m is orthonormal).
  double norm_at(double s) const { return space_.coefficients(s).norm(); }

  const KrylovSpace& space() const noexcept { return space_; }

 private:
  Apply apply_;
  KrylovOptions opts_;
  KrylovSpace space_;
  Eigen::Index start_size_ = 0;
  double guess_ = 0.1;
};

template <class Apply>
KrylovStepper<std::decay_t<Apply>> make_krylov_stepper(Apply&& apply, KrylovOptions opts) {
  return KrylovStepper<std::decay_t<Apply>>(std::forward<Apply>(apply), opts);
}

/// Propagates psi from t0 and calls obs(t, psi_t) at each ascending sample time >= t0.
template <class Apply, class Observer>
void krylov_propagate(Apply&& apply, Eigen::VectorXcd psi, double t0, std::span<const double> sample_times,
                      const KrylovOptions& opts, Observer&& obs) {
  auto stepper = make_krylov_stepper(std::forward<Apply>(apply), opts);
  double t = t0;
  std::size_t next = 0;
  Eigen::VectorXcd tmp(psi.size());
  while (next < sample_times.size()) {
    if (sample_times[next] < t) throw DomainError("sample times must be ascending and >= t0");
    if (sample_times[next] == t) {
      obs(t, psi);
      ++next;
      continue;
    }
    const double tau = stepper.begin_step(psi, sample_times.back() - t);
    while (next < sample_times.size() && sample_times[next] <= t + tau) {
      const double s = sample_times[next] - t;
      stepper.state_at(s, tmp);
      obs(sample_times[next], tmp);
      ++next;
    }
    stepper.state_at(tau, psi);
    t += tau;
  }
}

}  // namespace wqed
