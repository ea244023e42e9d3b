#pragma once

// Ancilla revival counting and the inverse-revival-rate observable O(t).

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "wqed/dynamics.hpp"
#include "wqed/errors.hpp"
#include "wqed/model.hpp"
#include "wqed/observables.hpp"
#include "wqed/stats.hpp"

namespace wqed {

struct RevivalConfig {
  double q_min = 0.4;
  double population_threshold = 0.25;
  double sampling_interval = 0.05;
  /// Where the running minimum in the Q denominator restarts.
  enum class MinimumReset { SinceAccepted, SinceDetected };
  MinimumReset reset = MinimumReset::SinceAccepted;

  void validate() const {
    if (!(q_min > 0.0)) throw DomainError("q_min must be positive");
    if (!(population_threshold > 0.0 && population_threshold < 1.0))
      throw DomainError("population threshold must lie in (0, 1)");
    if (!(sampling_interval > 0.0)) throw DomainError("sampling interval must be positive");
  }
};

struct RevivalTrace {
  std::vector<double> times;
  std::vector<double> population;
  std::vector<std::size_t> maxima;    ///< sample indices of detected local maxima
  std::vector<std::size_t> accepted;  ///< subset of maxima counted as revivals
  std::vector<int> cumulative;        ///< N_rev at each sample

  std::vector<double> accepted_times() const {
    std::vector<double> t;
    for (auto i : accepted) t.push_back(times[i]);
    return t;
  }
  int count() const { return static_cast<int>(accepted.size()); }
};

/// Applies the visibility rule to a uniformly sampled trace.
///
/// A local maximum is a sample strictly above its predecessor followed by a
/// (possibly empty) plateau and then a strict decrease; the first plateau
/// sample is reported. Q = (p_max - p_min)/p_min with p_min the lowest sample
/// since the reference point (infinite when p_min = 0).
inline RevivalTrace count_revivals(std::span<const double> times, std::span<const double> pop,
                                   const RevivalConfig& cfg = {}) {
  cfg.validate();
  if (times.size() != pop.size()) throw DomainError("times and populations differ in length");
  if (times.size() < 3) throw DomainError("revival counting needs at least three samples");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw DomainError("sample times must increase");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs((times[i] - times[i - 1]) - dt) > 1e-6 * dt)
      throw DomainError("revival counting needs uniform sampling; resample first");

  RevivalTrace tr;
  tr.times.assign(times.begin(), times.end());
  tr.population.assign(pop.begin(), pop.end());
  tr.cumulative.assign(times.size(), 0);
  const std::size_t n = pop.size();
  // The running minimum covers samples from the last reset through the candidate.
  double running_min = pop[0];
  std::size_t scanned = 0;
  auto extend_min = [&](std::size_t upto) {
    for (; scanned <= upto; ++scanned) running_min = std::min(running_min, pop[scanned]);
  };
  auto restart_min = [&](std::size_t at) {
    scanned = at;
    running_min = pop[at];
  };

  for (std::size_t i = 1; i + 1 < n;) {
    if (!(pop[i] > pop[i - 1])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && pop[j + 1] == pop[i]) ++j;
    if (j + 1 >= n || !(pop[j + 1] < pop[i])) {
      i = j + 1;
      continue;
    }
    tr.maxima.push_back(i);
    extend_min(i);
    const double q = running_min == 0.0 ? std::numeric_limits<double>::infinity()
                                        : (pop[i] - running_min) / running_min;
    const bool accept = q > cfg.q_min && pop[i] > cfg.population_threshold;
    if (accept) tr.accepted.push_back(i);
    if (accept || cfg.reset == RevivalConfig::MinimumReset::SinceDetected) restart_min(i);
    i = j + 1;
  }
  std::size_t a = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (a < tr.accepted.size() && tr.accepted[a] <= i) ++a;
    tr.cumulative[i] = static_cast<int>(a);
  }
  return tr;
}

struct RateCurve {
  std::vector<double> times;
  std::vector<double> mean_count, count_std_error;
  /// N_rev(t)/t; undefined at t = 0.
  std::vector<std::optional<double>> rate, rate_std_error;
  std::size_t n_traces = 0;
};

/// R(t) = mean N_rev(t) / t over independently counted traces on a shared grid.
inline RateCurve revival_rate_ensemble(std::span<const RevivalTrace> traces) {
  if (traces.empty()) throw DomainError("no traces to average");
  RateCurve c;
  c.times = traces.front().times;
  SeriesStats counts(c.times.size());
  for (const auto& t : traces) {
    if (t.times != c.times) throw DomainError("traces are on different grids");
    std::vector<double> v(t.cumulative.begin(), t.cumulative.end());
    counts.add(std::span<const double>(v));
  }
  c.mean_count = counts.means();
  c.count_std_error = counts.stderrs();
  c.n_traces = traces.size();
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    if (c.times[i] > 0.0) {
      c.rate.emplace_back(c.mean_count[i] / c.times[i]);
      c.rate_std_error.emplace_back(c.count_std_error[i] / c.times[i]);
    } else {
      c.rate.emplace_back(std::nullopt);
      c.rate_std_error.emplace_back(std::nullopt);
    }
  }
  return c;
}

/// O(t) = 1/R(t) - 1/R0(t), undefined where either rate is missing or zero.
inline std::vector<std::optional<double>> interacting_dof(const RateCurve& loaded, const RateCurve& reference) {
  if (loaded.times != reference.times) throw DomainError("rate curves are on different grids");
  std::vector<std::optional<double>> o(loaded.times.size());
  for (std::size_t i = 0; i < o.size(); ++i) {
    const auto& r = loaded.rate[i];
    const auto& r0 = reference.rate[i];
    if (r && r0 && *r > 0.0 && *r0 > 0.0) o[i] = 1.0 / *r - 1.0 / *r0;
  }
  return o;
}

struct RevivalExperimentConfig {
  int n_atoms = 14;  ///< including the ancilla
  int n_exc = 2;     ///< including the ancilla excitation
  WaveguideVariant variant = WaveguideVariant::HalfHermitian;
  AncillaSpec ancilla{};
  double spacing = kDefaultSpacing;
  DisorderSpec disorder = DisorderSpec::full(0);
  double t_max = 300.0;
  std::size_t n_realizations = 10;
  std::size_t n_trajectories = 500;  ///< open variant only
  std::uint64_t seed = 0;
  /// Explicit waveguide excitations; empty selects the random-phase superposition.
  std::vector<int> load_sites;
  RevivalConfig counting{};
  double tolerance = 1e-8;
  int krylov_dim = 30;
  unsigned threads = 1;
};

struct RevivalExperimentResult {
  RateCurve loaded;
  RateCurve reference;
  std::vector<std::optional<double>> o;
  std::vector<int> loaded_counts;     ///< final N_rev per trace
  std::vector<int> reference_counts;  ///< final N_rev per trace
};

namespace detail {

/// Ancilla traces for one realization: one for closed evolution, one per trajectory when open.
inline std::vector<RevivalTrace> revival_traces(const RevivalExperimentConfig& cfg, const ModelMatrices& model,
                                                const BasisPtr& basis, const StateVector& psi0, std::uint64_t r) {
  const int ancilla = *model.ancilla;
  PropagationConfig pc;
  pc.t_max = cfg.t_max;
  const auto n_samples = static_cast<std::size_t>(std::llround(cfg.t_max / cfg.counting.sampling_interval)) + 1;
  pc.sample_times = PropagationConfig::uniform_grid(cfg.t_max, n_samples);
  pc.tolerance = cfg.tolerance;
  pc.krylov_dim = cfg.krylov_dim;
  std::vector<RevivalTrace> out;
  const auto [lo, hi] = psi0.sector_support();
  if (is_hermitian(cfg.variant)) {
    const auto h = sector_hamiltonian(model, basis, lo, hi);
    std::vector<double> pop;
    pop.reserve(n_samples);
    evolve_closed(h, psi0, pc, [&](double, const StateVector& s) { pop.push_back(ancilla_population(s, ancilla)); });
    out.push_back(count_revivals(pc.sample_times, pop, cfg.counting));
    return out;
  }
  const auto h = sector_hamiltonian(model, basis, 0, hi);
  auto ens = jump_ensemble(
      model, h, psi0, pc, cfg.seed, r, cfg.n_trajectories,
      [ancilla](const StateVector& s) { return std::vector<double>{ancilla_population(s, ancilla)}; }, 1, true);
  for (const auto& rec : ens.records) {
    std::vector<double> pop(rec.samples.size());
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i] = rec.samples[i][0];
    out.push_back(count_revivals(pc.sample_times, pop, cfg.counting));
  }
  return out;
}

}  // namespace detail

/// Rebuilds a trace from its grid and accepted indices (maxima are not restored).
inline RevivalTrace trace_from_accepted(std::vector<double> times, std::vector<std::size_t> accepted) {
  RevivalTrace tr;
  tr.times = std::move(times);
  tr.accepted = std::move(accepted);
  tr.cumulative.assign(tr.times.size(), 0);
  std::size_t a = 0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    while (a < tr.accepted.size() && tr.accepted[a] <= i) ++a;
    tr.cumulative[i] = static_cast<int>(a);
  }
  return tr;
}

inline void validate(const RevivalExperimentConfig& cfg) {
  if (!is_half(cfg.variant)) throw DomainError("revival experiments use a half waveguide");
  if (cfg.n_atoms < 2) throw DomainError("need at least one waveguide atom besides the ancilla");
  if (cfg.n_exc < 1 || cfg.n_exc > cfg.n_atoms) throw DomainError("invalid excitation number");
  if (!cfg.load_sites.empty() && static_cast<int>(cfg.load_sites.size()) != cfg.n_exc - 1)
    throw DomainError("load_sites must list n_exc - 1 waveguide sites");
  cfg.counting.validate();
}

struct RevivalRealization {
  std::vector<RevivalTrace> loaded;
  std::vector<RevivalTrace> reference;
};

/// Loaded and reference traces for disorder realization r. The ancilla is the
/// last atom; waveguide atoms are 0..N-2. Random phases of the waveguide state
/// come from substream 1 of the realization stream.
inline RevivalRealization revival_realization(const RevivalExperimentConfig& cfg, std::uint64_t r) {
  validate(cfg);
  const int nw = cfg.n_atoms - 1;
  const int ancilla = nw;
  const auto basis = build_basis(cfg.n_atoms, cfg.n_exc);
  DisorderSpec dis = cfg.disorder;
  dis.seed = cfg.seed;
  dis.realization = r;
  const auto model = attach_ancilla(build_model(sample_positions(nw, cfg.spacing, dis), cfg.variant), cfg.ancilla);

  const std::vector<int> a_only{ancilla};
  const StateVector ref0 = prepare_product(a_only, basis);
  StateVector psi0(basis);
  if (cfg.n_exc == 1) {
    psi0 = ref0;
  } else if (!cfg.load_sites.empty()) {
    std::vector<int> sites = cfg.load_sites;
    sites.push_back(ancilla);
    psi0 = prepare_product(sites, basis);
  } else {
    Rng rng = realization_stream(cfg.seed, r).substream(1);
    const auto wg_basis = build_basis(nw, cfg.n_exc - 1);
    std::vector<int> all(static_cast<std::size_t>(nw));
    for (int i = 0; i < nw; ++i) all[static_cast<std::size_t>(i)] = i;
    const auto wg = prepare_random_phase_superposition(all, cfg.n_exc - 1, rng, wg_basis);
    const std::uint64_t abit = std::uint64_t{1} << ancilla;
    wg_basis->for_each_in_sector(cfg.n_exc - 1, [&](std::size_t idx, std::uint64_t bits) {
      psi0.amplitudes()[static_cast<Eigen::Index>(basis->rank(OccupationPattern(bits | abit)))] =
          wg.amplitudes()[static_cast<Eigen::Index>(idx)];
    });
  }
  RevivalRealization out;
  out.loaded = detail::revival_traces(cfg, model, basis, psi0, r);
  out.reference = cfg.n_exc == 1 ? out.loaded : detail::revival_traces(cfg, model, basis, ref0, r);
  return out;
}

inline RevivalExperimentResult assemble_revivals(std::vector<RevivalRealization> per_realization) {
  std::vector<RevivalTrace> lt, rt;
  RevivalExperimentResult res;
  for (auto& rr : per_realization) {
    for (auto& t : rr.loaded) {
      res.loaded_counts.push_back(t.count());
      lt.push_back(std::move(t));
    }
    for (auto& t : rr.reference) {
      res.reference_counts.push_back(t.count());
      rt.push_back(std::move(t));
    }
  }
  res.loaded = revival_rate_ensemble(lt);
  res.reference = revival_rate_ensemble(rt);
  res.o = interacting_dof(res.loaded, res.reference);
  return res;
}

/// Loaded and reference (n_exc = 1) revival rates on paired disorder realizations.
inline RevivalExperimentResult revival_experiment(const RevivalExperimentConfig& cfg) {
  validate(cfg);
  std::vector<RevivalRealization> per(cfg.n_realizations);
  parallel_for(cfg.n_realizations, cfg.threads, [&](std::size_t r) { per[r] = revival_realization(cfg, r); });
  return assemble_revivals(std::move(per));
}

}  // namespace wqed
