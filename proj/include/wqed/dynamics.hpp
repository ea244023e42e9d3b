#pragma once

// Time evolution: closed and effective (non-Hermitian) Krylov propagation,
// dense Lindblad integration, and quantum-jump trajectories.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wqed/errors.hpp"
#include "wqed/hilbert.hpp"
#include "wqed/krylov.hpp"
#include "wqed/model.hpp"
#include "wqed/observables.hpp"
#include "wqed/parallel.hpp"
#include "wqed/rng.hpp"
#include "wqed/stats.hpp"

namespace wqed {

enum class MethodContract { NormPreservingClosed, NormDecayingEffective, TracePreservingMaster };

struct PropagationConfig {
  double t_max = 100.0;
  /// Ascending times in [0, t_max]; empty selects 400 uniform samples.
  std::vector<double> sample_times;
  double tolerance = 1e-8;
  int krylov_dim = 30;
  MethodContract contract = MethodContract::NormPreservingClosed;

  /// n points from 0 to t_max inclusive.
  static std::vector<double> uniform_grid(double t_max, std::size_t n) {
    if (n < 2) throw DomainError("a grid needs at least two points");
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = t_max * static_cast<double>(i) / static_cast<double>(n - 1);
    t.back() = t_max;
    return t;
  }

  std::vector<double> times() const {
    if (!(t_max > 0.0)) throw DomainError("t_max must be positive");
    if (sample_times.empty()) return uniform_grid(t_max, 400);
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
      if (sample_times[i] < 0.0 || sample_times[i] > t_max) throw DomainError("sample time outside [0, t_max]");
      if (i > 0 && sample_times[i] <= sample_times[i - 1]) throw DomainError("sample times must be ascending");
    }
    return sample_times;
  }

  KrylovOptions krylov() const {
    KrylovOptions o;
    o.max_dim = krylov_dim;
    o.tolerance = tolerance;
    return o;
  }
};

using StateObserver = std::function<void(double, const StateVector&)>;

namespace detail {

inline void require_sectors(const SectorOperator& h, int lo, int hi) {
  if (lo < 0) throw DomainError("initial state is the zero vector");
  if (!h.has_sector(lo) || !h.has_sector(hi))
    throw DomainError("operator does not cover sectors [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

inline double sparse_max_abs(const SparseMatrixC& m) {
  double r = 0.0;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrixC::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

inline void require_hermitian(const SectorOperator& h, int lo, int hi) {
  for (int k = lo; k <= hi; ++k) {
    const auto& b = h.block(k);
    const SparseMatrixC adj = b.adjoint();
    const SparseMatrixC diff = b - adj;
    if (sparse_max_abs(diff) > 1e-10 * std::max(1.0, sparse_max_abs(b)))
      throw DomainError("closed evolution needs a Hermitian operator (sector " + std::to_string(k) + ")");
  }
}

/// Krylov propagation confined to the occupied sector range of psi0.
/// `check(t, norm)` runs at every sample before the observer.
template <class Check>
void propagate_in_range(const SectorOperator& h, const StateVector& psi0, const PropagationConfig& cfg,
                        const StateObserver& obs, Check&& check) {
  const auto [lo, hi] = psi0.sector_support();
  require_sectors(h, lo, hi);
  const auto& basis = h.basis();
  const auto off = static_cast<Eigen::Index>(basis.sector_begin(lo));
  const auto len = static_cast<Eigen::Index>(basis.sector_end(hi) - basis.sector_begin(lo));
  const auto times = cfg.times();
  StateVector full(psi0.basis_ptr());
  auto apply = [&h, lo = lo, hi = hi](const auto& in, Eigen::VectorXcd& out) { h.apply_range(lo, hi, in, out); };
  krylov_propagate(apply, Eigen::VectorXcd(psi0.amplitudes().segment(off, len)), 0.0, times, cfg.krylov(),
                   [&](double t, const Eigen::VectorXcd& v) {
                     full.amplitudes().segment(off, len) = v;
                     check(t, v.norm());
                     obs(t, full);
                   });
}

}  // namespace detail

/// psi(t) = exp(-i H t) psi0 at every sample time. H must be Hermitian on the occupied sectors.
inline void evolve_closed(const SectorOperator& h, const StateVector& psi0, const PropagationConfig& cfg,
                          const StateObserver& obs) {
  const auto [lo, hi] = psi0.sector_support();
  detail::require_sectors(h, lo, hi);
  detail::require_hermitian(h, lo, hi);
  const double n0 = psi0.norm();
  detail::propagate_in_range(h, psi0, cfg, obs, [&](double t, double n) {
    if (std::abs(n - n0) > 1e-6 * n0)
      throw NumericalError("closed evolution lost norm conservation at t=" + std::to_string(t) + " (" +
                           std::to_string(n) + " vs " + std::to_string(n0) + ")");
  });
}

inline std::vector<StateVector> evolve_closed(const SectorOperator& h, const StateVector& psi0,
                                              const PropagationConfig& cfg) {
  std::vector<StateVector> out;
  evolve_closed(h, psi0, cfg, [&](double, const StateVector& s) { out.push_back(s); });
  return out;
}

/// No-jump evolution under the non-Hermitian H_eff; the norm is left unnormalized.
inline void evolve_effective(const SectorOperator& h, const StateVector& psi0, const PropagationConfig& cfg,
                             const StateObserver& obs) {
  double last = psi0.norm();
  detail::propagate_in_range(h, psi0, cfg, obs, [&](double t, double n) {
    if (n > last * (1.0 + 1e-8) + 1e-14)
      throw NumericalError("norm increased under effective evolution at t=" + std::to_string(t) +
                           "; the operator is not purely decaying");
    last = n;
  });
}

struct EffectiveSamples {
  std::vector<StateVector> states;
  std::vector<double> norm_sq;  ///< no-jump survival probability at each sample
};

inline EffectiveSamples evolve_effective(const SectorOperator& h, const StateVector& psi0,
                                         const PropagationConfig& cfg) {
  EffectiveSamples out;
  evolve_effective(h, psi0, cfg, [&](double, const StateVector& s) {
    out.states.push_back(s);
    out.norm_sq.push_back(s.amplitudes().squaredNorm());
  });
  return out;
}

/// sum_m lambda_m ||L_m psi||^2, the instantaneous decay rate of ||psi||^2.
inline double total_jump_rate(const ModelMatrices& model, const StateVector& psi) {
  double r = 0.0;
  for (const auto& ch : model.jumps) {
    const std::span<const cplx> w(ch.weights.data(), static_cast<std::size_t>(ch.weights.size()));
    r += ch.rate * apply_lowering(w, psi).amplitudes().squaredNorm();
  }
  return r;
}

struct MasterOptions {
  /// Positivity is checked by full diagonalization at every sample up to this
  /// dimension and only at the final sample above it.
  std::size_t positivity_check_max_dim = 600;
  double positivity_tolerance = 1e-6;
};

using DensityObserver = std::function<void(double, const DensityMatrix&)>;

/// Integrates rho' = -i(H rho - rho H^dagger) + sum_m lambda_m L_m rho L_m^dagger on the
/// full basis of rho0 (the vacuum included, so the trace is conserved).
inline void master_equation_evolve(const ModelMatrices& model, const DensityMatrix& rho0, const PropagationConfig& cfg,
                                   const DensityObserver& obs, const MasterOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  const auto& basis_ptr = rho0.basis_ptr();
  const auto d = static_cast<Eigen::Index>(basis_ptr->dim());
  const SparseMatrixC h = sector_hamiltonian(model, basis_ptr).to_sparse();
  std::vector<SparseMatrixC> ls;
  for (const auto& ch : model.jumps) {
    const Eigen::VectorXcd w = std::sqrt(ch.rate) * ch.weights;
    ls.push_back(lowering_matrix(*basis_ptr, std::span<const cplx>(w.data(), static_cast<std::size_t>(w.size()))));
  }
  const auto times = cfg.times();
  using State = std::vector<cplx>;
  State x(rho0.matrix().data(), rho0.matrix().data() + d * d);
  const cplx minus_i(0.0, -1.0);
  Eigen::MatrixXcd hr(d, d), a(d, d), b(d, d);

  auto rhs = [&](const State& xs, State& dxdt, double) {
    Eigen::Map<const Eigen::MatrixXcd> r(xs.data(), d, d);
    Eigen::Map<Eigen::MatrixXcd> dr(dxdt.data(), d, d);
    hr.noalias() = h * r;
    // rho H^dagger = (H rho)^dagger for Hermitian rho; using it keeps rho exactly Hermitian.
    dr = minus_i * hr - minus_i * hr.adjoint();
    for (const auto& l : ls) {
      a.noalias() = l * r;
      b.noalias() = l * a.adjoint();
      dr += b.adjoint();
    }
  };

  const double trace0 = rho0.trace();
  DensityMatrix current(basis_ptr);
  std::size_t sample = 0;
  auto observer = [&](const State& xs, double t) {
    current.matrix() = Eigen::Map<const Eigen::MatrixXcd>(xs.data(), d, d);
    if (std::abs(current.trace() - trace0) > 1e-8)
      throw NumericalError("master equation lost trace at t=" + std::to_string(t));
    if (current.hermiticity_error() > 1e-8) throw NumericalError("master equation lost Hermiticity");
    const bool last = ++sample == times.size();
    if (static_cast<std::size_t>(d) <= opt.positivity_check_max_dim || last) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(current.matrix(), Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -opt.positivity_tolerance)
        throw NumericalError("density matrix lost positivity at t=" + std::to_string(t) + " (min eigenvalue " +
                             std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    obs(t, current);
  };
  auto stepper = odeint::make_dense_output(1e-2 * cfg.tolerance, cfg.tolerance, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-3, observer);
}

inline std::vector<DensityMatrix> master_equation_evolve(const ModelMatrices& model, const DensityMatrix& rho0,
                                                         const PropagationConfig& cfg, const MasterOptions& opt = {}) {
  std::vector<DensityMatrix> out;
  master_equation_evolve(model, rho0, cfg, [&](double, const DensityMatrix& r) { out.push_back(r); }, opt);
  return out;
}

struct JumpEvent {
  double time = 0.0;
  int channel = 0;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<JumpEvent> jumps;
  /// One row per sample time, produced by the sampler from the normalized state.
  std::vector<std::vector<double>> samples;
};

using StateSampler = std::function<std::vector<double>(const StateVector&)>;

inline StateSampler population_sampler() {
  return [](const StateVector& s) { return site_populations(s); };
}

/// One quantum-jump trajectory. `h` is the effective Hamiltonian and must
/// cover sectors 0..k_max of psi0. Waiting times are found by solving
/// ||psi(t)||^2 = u on the no-jump evolution; the channel is drawn with weight
/// lambda_m ||L_m psi||^2. RNG draws: u, then (channel, next u) per jump.
inline TrajectoryRecord quantum_jump_trajectory(const ModelMatrices& model, const SectorOperator& h,
                                                const StateVector& psi0, const PropagationConfig& cfg, Rng& rng,
                                                const StateSampler& sampler = population_sampler()) {
  TrajectoryRecord rec;
  rec.seed = rng.seed();
  const auto& basis = h.basis();
  const auto times = cfg.times();
  const auto support = psi0.sector_support();
  int lo = support.first, hi = support.second;
  detail::require_sectors(h, 0, hi);
  const int max_jumps = hi;

  auto range_offset = [&](int l) { return static_cast<Eigen::Index>(basis.sector_begin(l)); };
  auto range_len = [&](int l, int u) {
    return static_cast<Eigen::Index>(basis.sector_end(u) - basis.sector_begin(l));
  };

  Eigen::VectorXcd x = psi0.amplitudes().segment(range_offset(lo), range_len(lo, hi));
  x /= x.norm();
  auto apply = [&h, &lo, &hi](const auto& in, Eigen::VectorXcd& out) { h.apply_range(lo, hi, in, out); };
  auto stepper = make_krylov_stepper(apply, cfg.krylov());

  StateVector full(psi0.basis_ptr());
  auto emit = [&](const Eigen::VectorXcd& v) {
    full.amplitudes().setZero();
    full.amplitudes().segment(range_offset(lo), v.size()) = v / v.norm();
    rec.samples.push_back(sampler(full));
  };

  double t = 0.0;
  double u = rng.uniform();
  std::size_t next = 0;
  Eigen::VectorXcd tmp;
  const double rel_time_tol = 1e-10;
  while (next < times.size()) {
    if (times[next] <= t) {
      emit(x);
      ++next;
      continue;
    }
    const double tau = stepper.begin_step(x, times.back() - t);
    const bool can_jump = !model.jumps.empty() && hi > 0;
    double s_jump = std::numeric_limits<double>::infinity();
    if (can_jump && std::pow(stepper.norm_at(tau), 2) <= u) {
      auto f = [&](double s) { return std::pow(stepper.norm_at(s), 2) - u; };
      auto tol = [&](double a, double b) { return std::abs(b - a) <= rel_time_tol * std::max(1.0, t + a); };
      std::uintmax_t iters = 200;
      const auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, tau, f(0.0), f(tau), tol, iters);
      s_jump = 0.5 * (a + b);
    }
    const double span_end = std::min(tau, s_jump);
    while (next < times.size() && times[next] <= t + span_end) {
      stepper.state_at(times[next] - t, tmp);
      emit(tmp);
      ++next;
    }
    if (!std::isfinite(s_jump)) {
      stepper.state_at(tau, x);
      t += tau;
      continue;
    }

    // Jump at t + s_jump.
    stepper.state_at(s_jump, tmp);
    const int nlo = std::max(lo - 1, 0), nhi = hi - 1;
    std::vector<Eigen::VectorXcd> out(model.jumps.size());
    std::vector<double> weight(model.jumps.size());
    double total = 0.0;
    for (std::size_t m = 0; m < model.jumps.size(); ++m) {
      const auto& ch = model.jumps[m];
      const std::span<const cplx> w(ch.weights.data(), static_cast<std::size_t>(ch.weights.size()));
      out[m] = Eigen::VectorXcd::Zero(range_len(nlo, nhi));
      for (int k = std::max(lo, 1); k <= hi; ++k) {
        lower_sector(basis, k, w, tmp.segment(range_offset(k) - range_offset(lo), range_len(k, k)),
                     out[m].segment(range_offset(k - 1) - range_offset(nlo), range_len(k - 1, k - 1)));
      }
      weight[m] = ch.rate * out[m].squaredNorm();
      total += weight[m];
    }
    if (!(total > 0.0)) throw NumericalError("norm decayed but no jump channel is active");
    const double pick = rng.uniform() * total;
    std::size_t m = 0;
    double acc = weight[0];
    while (acc <= pick && m + 1 < weight.size()) acc += weight[++m];
    rec.jumps.push_back({t + s_jump, static_cast<int>(m)});
    if (static_cast<int>(rec.jumps.size()) > max_jumps)
      throw NumericalError("more jumps than initial excitations");
    lo = nlo;
    hi = nhi;
    x = out[m] / out[m].norm();
    t += s_jump;
    u = rng.uniform();
  }
  return rec;
}

/// Mean and standard error of a per-sample series.
struct SeriesSummary {
  std::vector<double> mean;
  std::vector<double> std_error;
};

struct TrajectoryEnsemble {
  /// [sample][component] mean and standard error across trajectories.
  std::vector<std::vector<double>> mean, std_error;
  std::size_t n_trajectories = 0;
  std::size_t n_failed = 0;
  std::vector<TrajectoryRecord> records;  ///< filled only when requested
};

/// Runs n_trajectories trajectories with streams trajectory_stream(master, realization, j).
/// Failed trajectories are dropped from the averages; more than 1% failures aborts.
inline TrajectoryEnsemble jump_ensemble(const ModelMatrices& model, const SectorOperator& h, const StateVector& psi0,
                                        const PropagationConfig& cfg, std::uint64_t master_seed,
                                        std::uint64_t realization, std::size_t n_trajectories,
                                        const StateSampler& sampler = population_sampler(), unsigned threads = 1,
                                        bool keep_records = false) {
  if (n_trajectories < 1) throw DomainError("need at least one trajectory");
  std::vector<std::optional<TrajectoryRecord>> recs(n_trajectories);
  parallel_for(n_trajectories, threads, [&](std::size_t j) {
    Rng rng = trajectory_stream(master_seed, realization, j);
    try {
      recs[j] = quantum_jump_trajectory(model, h, psi0, cfg, rng, sampler);
    } catch (const NumericalError&) {
      recs[j].reset();
    }
  });
  TrajectoryEnsemble e;
  std::vector<std::vector<RunningStats>> acc;
  for (auto& r : recs) {
    if (!r) {
      ++e.n_failed;
      continue;
    }
    if (acc.empty()) acc.assign(r->samples.size(), std::vector<RunningStats>(r->samples.front().size()));
    for (std::size_t s = 0; s < r->samples.size(); ++s)
      for (std::size_t c = 0; c < r->samples[s].size(); ++c) acc[s][c].add(r->samples[s][c]);
    ++e.n_trajectories;
    if (keep_records) e.records.push_back(std::move(*r));
  }
  if (e.n_failed * 100 > n_trajectories)
    throw NumericalError(std::to_string(e.n_failed) + " of " + std::to_string(n_trajectories) +
                         " trajectories failed");
  e.mean.resize(acc.size());
  e.std_error.resize(acc.size());
  for (std::size_t s = 0; s < acc.size(); ++s) {
    for (const auto& a : acc[s]) {
      e.mean[s].push_back(a.mean());
      e.std_error[s].push_back(a.stderr_of_mean());
    }
  }
  return e;
}

/// Disorder- and trajectory-averaged observables with provenance.
/// `series` holds mean and standard error across realizations (each realization
/// contributes one independent sample, its trajectory average when open).
/// `trajectory_stratum` holds the realization-averaged within-realization
/// standard error of the trajectory mean.
struct EnsembleResult {
  std::vector<double> times;
  std::map<std::string, SeriesSummary> series;
  std::map<std::string, SeriesSummary> trajectory_stratum;
  std::size_t n_realizations = 0;
  std::size_t n_trajectories = 0;
  std::size_t n_failed_trajectories = 0;
  std::uint64_t master_seed = 0;
  std::string config_hash;
};

}  // namespace wqed
