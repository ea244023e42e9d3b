#pragma once

// Linear and saturated single-atom scattering, and transfer-matrix
// transmittance of disordered chains.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "wqed/model.hpp"
#include "wqed/stats.hpp"

namespace wqed {

struct ScatterPoint {
  double detuning = 0.0;
  cplx r;
  cplx t;
};

/// r = -Gamma/(Gamma - 2 i Delta), t = 1 + r.
inline ScatterPoint single_atom_rt(double detuning, double gamma_1d = 1.0) {
  const cplx r = -gamma_1d / cplx(gamma_1d, -2.0 * detuning);
  return {detuning, r, 1.0 + r};
}

/// |t(Delta)|^2 = 4 Delta^2 / (Gamma^2 + 4 Delta^2).
inline double single_atom_transmittance(double detuning, double gamma_1d = 1.0) {
  const double d2 = 4.0 * detuning * detuning;
  return d2 / (gamma_1d * gamma_1d + d2);
}

struct ChainTransmission {
  double log_t = 0.0;      ///< natural log of T_tot
  bool rescaled = false;   ///< true when the running product was renormalized
  double transmittance() const { return std::exp(log_t); }
};

/// Transmittance through the chain via products of 2x2 transfer matrices.
///
/// Each atom contributes M = (1/t) [[t^2 - r^2, r], [-r, 1]] and free flight
/// between atoms diag(e^{ik dz}, e^{-ik dz}). T_tot = 1/|M_22|^2. The running
/// product is divided by its largest entry after every atom and the scale is
/// tracked in log form, so chains far beyond the localization length stay finite.
inline ChainTransmission chain_transmittance(const Geometry& geom, double detuning, double gamma_1d = 1.0) {
  const auto sp = single_atom_rt(detuning, gamma_1d);
  ChainTransmission out;
  if (std::abs(sp.t) == 0.0) {
    out.log_t = -std::numeric_limits<double>::infinity();
    return out;
  }
  Eigen::Matrix2cd atom;
  atom << (sp.t * sp.t - sp.r * sp.r) / sp.t, sp.r / sp.t, -sp.r / sp.t, 1.0 / sp.t;
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
  double log_scale = 0.0;
  for (int i = 0; i < geom.n_atoms(); ++i) {
    if (i > 0) {
      const double phase = geom.k1d * (geom.positions[i] - geom.positions[i - 1]);
      m.row(0) *= std::polar(1.0, phase);
      m.row(1) *= std::polar(1.0, -phase);
    }
    m = atom * m;
    const double s = m.cwiseAbs().maxCoeff();
    if (s != 1.0) {
      m /= s;
      log_scale += std::log(s);
      out.rescaled = true;
    }
  }
  out.log_t = -2.0 * (std::log(std::abs(m(1, 1))) + log_scale);
  return out;
}

struct AndersonStats {
  double mean_log_t = 0.0;
  double var_log_t = 0.0;
  double mean_stderr = 0.0;
  double var_stderr = 0.0;
  std::size_t n_realizations = 0;
};

/// Ensemble mean and variance of log T_tot over disorder realizations
/// (realization r uses DisorderSpec{..., seed, r}).
inline AndersonStats anderson_statistics(int n_atoms, double spacing, DisorderSpec disorder, double detuning,
                                         std::size_t n_realizations, std::uint64_t seed) {
  if (n_realizations < 2) throw DomainError("need at least two realizations");
  disorder.seed = seed;
  std::vector<double> samples(n_realizations);
  for (std::size_t r = 0; r < n_realizations; ++r) {
    disorder.realization = r;
    samples[r] = chain_transmittance(sample_positions(n_atoms, spacing, disorder), detuning).log_t;
  }
  const auto m = moments(samples);
  AndersonStats s;
  s.n_realizations = n_realizations;
  s.mean_log_t = m.mean;
  s.var_log_t = m.variance;
  s.mean_stderr = std::sqrt(m.variance / static_cast<double>(n_realizations));
  // Large-sample standard error of the sample variance: sqrt((mu4 - sigma^4)/n).
  s.var_stderr = std::sqrt(std::max(0.0, m.fourth_central - m.variance * m.variance) /
                           static_cast<double>(n_realizations));
  return s;
}

struct LocalizationEstimate {
  enum class Regime { Linear, Saturated };
  double n_loc = 0.0;  ///< atoms; +infinity when T = 1
  Regime regime = Regime::Linear;
  bool diverged() const { return std::isinf(n_loc); }
};

inline double n_loc_from_transmittance(double t) {
  if (t >= 1.0) return std::numeric_limits<double>::infinity();
  if (t <= 0.0) return 0.0;
  return 1.0 / std::abs(std::log(t));
}

/// N_loc(Delta) = 1/|log T(Delta)|; zero on resonance.
inline LocalizationEstimate n_loc_linear(double detuning, double gamma_1d = 1.0) {
  return {n_loc_from_transmittance(single_atom_transmittance(detuning, gamma_1d)),
          LocalizationEstimate::Regime::Linear};
}

struct SaturationPoint {
  double detuning = 0.0;
  double omega = 0.0;
  double rho_ee = 0.0;
  cplx rho_eg;
  double transmittance = 1.0;
};

/// Steady state of a coherently driven atom and its saturated transmittance.
inline SaturationPoint steady_state_bloch(double detuning, double omega, double gamma_1d = 1.0) {
  if (omega < 0.0) throw DomainError("Rabi amplitude must be non-negative");
  const double g2 = gamma_1d * gamma_1d, d2 = 4.0 * detuning * detuning, o2 = omega * omega;
  SaturationPoint p;
  p.detuning = detuning;
  p.omega = omega;
  if (std::isinf(omega)) {
    p.rho_ee = 0.5;
    p.transmittance = 1.0;
    return p;
  }
  const double denom = d2 + g2 + 2.0 * o2;
  p.rho_ee = o2 / denom;
  p.rho_eg = cplx(0.0, omega) * cplx(gamma_1d, 2.0 * detuning) / denom;
  p.transmittance = (d2 + 8.0 * o2) / (g2 + d2 + 8.0 * o2);
  return p;
}

/// Saturated localization length at excited population rho_ee: the drive that
/// produces rho_ee is Omega^2 = rho_ee (4 Delta^2 + Gamma^2)/(1 - 2 rho_ee).
inline LocalizationEstimate n_loc_saturated(double detuning, double rho_ee, double gamma_1d = 1.0) {
  if (rho_ee < 0.0) throw DomainError("rho_ee must be non-negative");
  LocalizationEstimate e;
  e.regime = LocalizationEstimate::Regime::Saturated;
  if (rho_ee >= 0.5) {
    e.n_loc = std::numeric_limits<double>::infinity();
    return e;
  }
  const double o2 = rho_ee * (4.0 * detuning * detuning + gamma_1d * gamma_1d) / (1.0 - 2.0 * rho_ee);
  e.n_loc = n_loc_from_transmittance(steady_state_bloch(detuning, std::sqrt(o2), gamma_1d).transmittance);
  return e;
}

}  // namespace wqed
