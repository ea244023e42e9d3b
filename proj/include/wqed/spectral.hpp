#pragma once

// Single-excitation eigenmodes. The one-excitation block of the many-body
// Hamiltonian is the kernel itself, so everything here is N x N.

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "wqed/model.hpp"
#include "wqed/stats.hpp"

namespace wqed {

/// Eigenpairs sorted by frequency (Re lambda) ascending, ties by decay rate, then by solver order.
/// Columns of `modes` are l2-normalized right eigenvectors.
struct ModeSet {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd modes;

  int size() const noexcept { return static_cast<int>(eigenvalues.size()); }
  Eigen::VectorXd frequencies() const { return eigenvalues.real(); }
  /// Gamma_xi = -2 Im lambda_xi.
  Eigen::VectorXd decay_rates() const { return -2.0 * eigenvalues.imag(); }
};

namespace detail {

inline ModeSet sorted_modes(const Eigen::VectorXcd& vals, const Eigen::MatrixXcd& vecs) {
  const auto n = vals.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (vals[a].real() != vals[b].real()) return vals[a].real() < vals[b].real();
    return -vals[a].imag() < -vals[b].imag();
  });
  ModeSet m;
  m.eigenvalues.resize(n);
  m.modes.resize(vecs.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    m.eigenvalues[c] = vals[order[static_cast<std::size_t>(c)]];
    m.modes.col(c) = vecs.col(order[static_cast<std::size_t>(c)]).normalized();
  }
  return m;
}

}  // namespace detail

inline ModeSet single_excitation_modes(const ModelMatrices& model) {
  const Eigen::MatrixXcd& k = model.kernel;
  if (k.rows() == 0) throw DomainError("empty model");
  if (k.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.real());
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
    return detail::sorted_modes(es.eigenvalues().cast<cplx>(), es.eigenvectors().cast<cplx>());
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(k);
  if (es.info() != Eigen::Success) throw NumericalError("complex eigensolver did not converge");
  return detail::sorted_modes(es.eigenvalues(), es.eigenvectors());
}

/// Largest residual ||K c - lambda c|| over all modes.
inline double max_mode_residual(const ModelMatrices& model, const ModeSet& modes) {
  double r = 0.0;
  for (int c = 0; c < modes.size(); ++c)
    r = std::max(r, (model.kernel * modes.modes.col(c) - modes.eigenvalues[c] * modes.modes.col(c)).norm());
  return r;
}

/// |c_j^xi| with atoms j as rows and modes xi as columns.
inline Eigen::MatrixXd mode_profile_map(const ModeSet& modes) { return modes.modes.cwiseAbs(); }

/// 1 / sum_j |c_j|^4 per mode, in [1, N].
inline Eigen::VectorXd participation_ratios(const ModeSet& modes) {
  Eigen::VectorXd pr(modes.size());
  for (int c = 0; c < modes.size(); ++c) pr[c] = 1.0 / modes.modes.col(c).cwiseAbs2().cwiseAbs2().sum();
  return pr;
}

/// Fraction of modes with Gamma_xi > Gamma_1D / 2.
inline double delocalized_fraction(const ModeSet& modes, double gamma_1d = 1.0) {
  const Eigen::VectorXd g = modes.decay_rates();
  return static_cast<double>((g.array() > 0.5 * gamma_1d).count()) / static_cast<double>(g.size());
}

struct AveragedSpectrum {
  std::vector<double> mean_frequency, frequency_stderr;
  std::vector<double> mean_decay, decay_stderr;
  std::vector<double> mean_participation;
  double mean_delocalized_fraction = 0.0;
  double delocalized_fraction_stderr = 0.0;
  std::size_t n_realizations = 0;
};

/// Per-index averages of omega_xi and Gamma_xi over disorder realizations
/// (realization r uses DisorderSpec{..., seed, r}).
inline AveragedSpectrum disorder_averaged_spectrum(int n_atoms, double spacing, DisorderSpec disorder,
                                                   std::size_t n_realizations, std::uint64_t seed,
                                                   WaveguideVariant variant = WaveguideVariant::FullOpen) {
  if (n_realizations < 1) throw DomainError("need at least one realization");
  disorder.seed = seed;
  SeriesStats freq, decay, pr;
  RunningStats frac;
  for (std::size_t r = 0; r < n_realizations; ++r) {
    disorder.realization = r;
    const auto modes = single_excitation_modes(build_model(sample_positions(n_atoms, spacing, disorder), variant));
    const Eigen::VectorXd w = modes.frequencies(), g = modes.decay_rates(), p = participation_ratios(modes);
    freq.add(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())));
    decay.add(std::span<const double>(g.data(), static_cast<std::size_t>(g.size())));
    pr.add(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
    frac.add(delocalized_fraction(modes));
  }
  AveragedSpectrum s;
  s.mean_frequency = freq.means();
  s.frequency_stderr = freq.stderrs();
  s.mean_decay = decay.means();
  s.decay_stderr = decay.stderrs();
  s.mean_participation = pr.means();
  s.mean_delocalized_fraction = frac.mean();
  s.delocalized_fraction_stderr = frac.stderr_of_mean();
  s.n_realizations = n_realizations;
  return s;
}

/// D(xi, xi') = |<psi_xi^(open) | psi_xi'^(hermitian)>|, rows and columns in sorted mode order.
inline Eigen::MatrixXd overlap_matrix(const ModelMatrices& open, const ModelMatrices& hermitian) {
  if (open.n_atoms() != hermitian.n_atoms()) throw DomainError("models differ in size");
  const auto a = single_excitation_modes(open);
  const auto b = single_excitation_modes(hermitian);
  return (a.modes.adjoint() * b.modes).cwiseAbs();
}

}  // namespace wqed
