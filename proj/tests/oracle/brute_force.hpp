#pragma once

// Reference implementations written without the restricted basis: full 2^N
// tensor-product operators, dense linear solves, and a closed-form extremum
// enumeration for a damped cosine.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// Qubit i is the i-th tensor factor counted from the right, so the full index
// has bit i set when atom i is excited.
inline MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// sigma_ge acting on atom `site` of an n-atom register.
inline MatrixXcd lowering(int n, int site) {
  MatrixXcd lower = MatrixXcd::Zero(2, 2);
  lower(0, 1) = 1.0;  // |g><e|
  MatrixXcd out = MatrixXcd::Identity(1, 1);
  for (int q = n - 1; q >= 0; --q) out = kron(out, q == site ? lower : MatrixXcd::Identity(2, 2));
  return out;
}

/// sum_ij K_ij sigma_eg^i sigma_ge^j on the full register.
inline MatrixXcd full_hamiltonian(const MatrixXcd& kernel) {
  const int n = static_cast<int>(kernel.rows());
  std::vector<MatrixXcd> s;
  for (int i = 0; i < n; ++i) s.push_back(lowering(n, i));
  const Eigen::Index d = Eigen::Index{1} << n;
  MatrixXcd h = MatrixXcd::Zero(d, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (kernel(i, j) != cplx{}) h += kernel(i, j) * s[i].adjoint() * s[j];
  return h;
}

/// Rows of the isometry from full register states onto the listed patterns.
inline MatrixXcd projector(int n, const std::vector<std::uint64_t>& patterns) {
  MatrixXcd p = MatrixXcd::Zero(static_cast<Eigen::Index>(patterns.size()), Eigen::Index{1} << n);
  for (std::size_t r = 0; r < patterns.size(); ++r) p(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(patterns[r])) = 1.0;
  return p;
}

inline std::vector<double> populations(const VectorXcd& full, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const MatrixXcd s = lowering(n, i);
    out.push_back((full.adjoint() * s.adjoint() * s * full)(0, 0).real());
  }
  return out;
}

/// Von Neumann entropy (natural log) of atoms [0, cut) via the reduced density matrix.
inline double entropy_left(const VectorXcd& full, int n, int cut) {
  const Eigen::Index dl = Eigen::Index{1} << cut, dr = Eigen::Index{1} << (n - cut);
  MatrixXcd rho = MatrixXcd::Zero(dl, dl);
  for (Eigen::Index a = 0; a < dl; ++a)
    for (Eigen::Index b = 0; b < dl; ++b)
      for (Eigen::Index r = 0; r < dr; ++r) rho(a, b) += full(a + dl * r) * std::conj(full(b + dl * r));
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho);
  double s = 0.0;
  for (Eigen::Index i = 0; i < dl; ++i) {
    const double p = es.eigenvalues()(i);
    if (p > 1e-14) s -= p * std::log(p);
  }
  return s;
}

/// Transmission amplitude of point scatterers at `z` (k = Gamma_1D = 1) from the
/// driven coupled-dipole linear system. Scattering uses the outgoing propagator
/// e^{+i|dz|}; the spin-model kernel with e^{-i|dz|} is its mirror under detuning -> -detuning.
inline cplx chain_transmission(const std::vector<double>& z, double detuning) {
  const auto n = static_cast<Eigen::Index>(z.size());
  MatrixXcd m(n, n);
  VectorXcd drive(n), out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(0.0, -0.5) * std::polar(1.0, std::abs(z[i] - z[j]));
    m(i, i) -= detuning;
    drive(i) = std::polar(1.0, z[i]);
    out(i) = std::polar(1.0, -z[i]);
  }
  const VectorXcd beta = m.partialPivLu().solve(drive);
  return 1.0 + cplx(0.0, 0.5) * (out.array() * beta.array()).sum();
}

/// Accepted revival count on [0, t_max] for f(t) = c + a e^{-t/tau} cos(t), enumerated
/// from the analytic extrema: maxima at 2 pi n - atan(1/tau), minima at (2n-1) pi - atan(1/tau).
/// The running minimum restarts after every accepted maximum.
inline int damped_cosine_revivals(double c, double a, double tau, double t_max, double q_min, double threshold) {
  const double shift = std::atan(1.0 / tau);
  auto f = [&](double t) { return c + a * std::exp(-t / tau) * std::cos(t); };
  double running_min = f(0.0);
  int count = 0;
  for (int n = 1;; ++n) {
    const double t_minimum = (2 * n - 1) * std::numbers::pi - shift;
    const double t_maximum = 2 * n * std::numbers::pi - shift;
    if (t_maximum >= t_max) break;
    running_min = std::min(running_min, f(t_minimum));
    const double peak = f(t_maximum);
    const double q = (peak - running_min) / running_min;
    if (q > q_min && peak > threshold) {
      ++count;
      running_min = peak;
    }
  }
  return count;
}

}  // namespace oracle
