#pragma once

// Dispatch from an ExperimentConfig to the module pipelines, with per-realization
// checkpoints under <output_dir>/partial so interrupted runs resume.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wqed/dynamics.hpp"
#include "wqed/harness/config.hpp"
#include "wqed/harness/output.hpp"
#include "wqed/model.hpp"
#include "wqed/observables.hpp"
#include "wqed/parallel.hpp"
#include "wqed/revival.hpp"
#include "wqed/scattering.hpp"
#include "wqed/spectral.hpp"
#include "wqed/stats.hpp"

#ifndef WQED_VERSION
#define WQED_VERSION "0.1.0"
#endif

namespace wqed::harness {

struct RunManifest {
  std::string config_hash;
  std::string code_version = WQED_VERSION;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> realization_seeds;
  double wall_seconds = 0.0;
  std::vector<std::string> failures;
  std::vector<std::string> files;
  std::size_t resumed_realizations = 0;
  nlohmann::json summary = nlohmann::json::object();

  nlohmann::json to_json() const {
    return {{"config_hash", config_hash},
            {"code_version", code_version},
            {"master_seed", master_seed},
            {"realization_seeds", realization_seeds},
            {"wall_seconds", wall_seconds},
            {"failures", failures},
            {"files", files},
            {"resumed_realizations", resumed_realizations},
            {"summary", summary},
            {"conventions",
             {{"units", "Gamma_1D = 1, k_1D = 1"},
              {"left_half", "sites [0, (N+1)/2) in 0-based order; the extra site of odd N is on the left"},
              {"entropy_log", "natural"},
              {"hermitian_kernel", "real part of the open kernel"},
              {"revival_minimum", "running minimum since the last accepted revival unless minimum_reset says otherwise"}}}};
  }
};

struct RunOptions {
  bool resume = true;
  std::function<void(const std::string&)> log;
};

namespace detail {

inline DisorderSpec disorder_of(const ExperimentConfig& c, std::uint64_t r) {
  return {c.disorder, c.disorder_width, c.seed, r};
}

inline std::vector<int> equidistant_sites(int n_atoms, int n_exc) {
  std::vector<int> s;
  for (int j = 0; j < n_exc; ++j)
    s.push_back(static_cast<int>(std::floor((j + 0.5) * n_atoms / static_cast<double>(n_exc))));
  return s;
}

inline std::optional<std::vector<int>> product_sites(const ExperimentConfig& c, int n_atoms, int n_exc) {
  using K = InitialStateSpec::Kind;
  if (c.initial.kind == K::Product) return c.initial.sites;
  if (c.initial.kind == K::Equidistant) return equidistant_sites(n_atoms, n_exc);
  return std::nullopt;
}

inline StateVector initial_state(const ExperimentConfig& c, const BasisPtr& basis, int n_exc, std::uint64_t r) {
  if (auto sites = product_sites(c, basis->n_atoms(), n_exc)) return prepare_product(*sites, basis);
  Rng rng = realization_stream(c.seed, r).substream(1);
  std::vector<int> left(static_cast<std::size_t>(left_half_size(basis->n_atoms())));
  for (std::size_t i = 0; i < left.size(); ++i) left[i] = static_cast<int>(i);
  return prepare_random_phase_superposition(left, n_exc, rng, basis);
}

inline std::vector<double> sample_grid(const ExperimentConfig& c) {
  return PropagationConfig::uniform_grid(c.t_max, static_cast<std::size_t>(c.n_samples));
}

inline PropagationConfig propagation(const ExperimentConfig& c, MethodContract m) {
  PropagationConfig p;
  p.t_max = c.t_max;
  p.sample_times = sample_grid(c);
  p.tolerance = c.tolerance;
  p.krylov_dim = c.krylov_dim;
  p.contract = m;
  return p;
}

/// Observable name -> per-sample values for one realization.
using SeriesMap = std::map<std::string, std::vector<std::optional<double>>>;

/// Derived observables from populations; entropy is appended by the caller.
inline void population_observables(const ExperimentConfig& c, const std::vector<double>& pops,
                                   const std::optional<std::vector<int>>& e_init, SeriesMap& out) {
  for (const auto& name : c.observables) {
    if (name == "site_populations") {
      for (std::size_t i = 0; i < pops.size(); ++i) out["p_" + std::to_string(i)].push_back(pops[i]);
    } else if (name == "total_population") {
      out[name].push_back(total_population(pops));
    } else if (name == "memory") {
      out[name].push_back(e_init ? std::optional<double>(memory_parameter(pops, *e_init)) : std::nullopt);
    } else if (name == "half_imbalance") {
      out[name].push_back(half_imbalance(pops));
    }
  }
}

inline nlohmann::json series_to_json(const SeriesMap& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : v) a.push_back(x ? nlohmann::json(*x) : nlohmann::json(nullptr));
    j[k] = a;
  }
  return j;
}

inline SeriesMap series_from_json(const nlohmann::json& j) {
  SeriesMap m;
  for (const auto& [k, v] : j.items())
    for (const auto& x : v) m[k].push_back(x.is_null() ? std::nullopt : std::optional<double>(x.get<double>()));
  return m;
}

/// Checkpoint store: one JSON file per realization, valid only for the same config hash.
class Checkpoints {
 public:
  Checkpoints(std::filesystem::path dir, std::string hash, bool enabled)
      : dir_(std::move(dir)), hash_(std::move(hash)), enabled_(enabled) {}

  std::optional<nlohmann::json> load(std::uint64_t r) const {
    if (!enabled_) return std::nullopt;
    const auto p = path(r);
    if (!std::filesystem::exists(p)) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(read_file(p));
      if (j.value("config_hash", "") != hash_) return std::nullopt;
      return j.at("data");
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void store(std::uint64_t r, const nlohmann::json& data) const {
    write_file_atomic(path(r), nlohmann::json{{"config_hash", hash_}, {"data", data}}.dump());
  }

 private:
  std::filesystem::path path(std::uint64_t r) const { return dir_ / ("r" + std::to_string(r) + ".json"); }
  std::filesystem::path dir_;
  std::string hash_;
  bool enabled_;
};

struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  RunManifest& manifest;
  std::filesystem::path out;

  void log(const std::string& s) const {
    if (opts.log) opts.log(s);
  }
  void provenance(CsvTable& t) const {
    t.comment("config_hash", manifest.config_hash);
    t.comment("seed", std::to_string(cfg.seed));
    t.comment("experiment", to_string(cfg.kind));
    t.comment("code_version", manifest.code_version);
  }
  void write(const CsvTable& t, const std::string& name) const {
    t.write(out / name);
    manifest.files.push_back(name);
  }
};

inline void run_anderson(Context& ctx) {
  const auto& c = ctx.cfg;
  CsvTable t({"n_atoms", "detuning", "mean_log_t", "mean_std_error", "var_log_t", "var_std_error",
              "predicted_mean", "predicted_var", "realizations"});
  ctx.provenance(t);
  for (int n : c.n_atoms) {
    for (double delta : c.detunings) {
      ctx.log("anderson-stats N=" + std::to_string(n) + " detuning=" + format_number(delta));
      const auto s = anderson_statistics(n, c.spacing, disorder_of(c, 0), delta, c.realizations, c.seed);
      const double nloc = n_loc_linear(delta).n_loc;
      t.row({std::to_string(n), format_number(delta), format_number(s.mean_log_t), format_number(s.mean_stderr),
             format_number(s.var_log_t), format_number(s.var_stderr), format_number(-n / nloc),
             format_number(2.0 * n / nloc), std::to_string(s.n_realizations)});
    }
  }
  ctx.write(t, "anderson.csv");
}

inline void run_saturation(Context& ctx) {
  const auto& c = ctx.cfg;
  if (!c.omegas.empty()) {
    CsvTable t({"detuning", "omega", "rho_ee", "transmittance", "n_loc", "diverged"});
    ctx.provenance(t);
    for (double delta : c.detunings)
      for (double om : c.omegas) {
        const auto p = steady_state_bloch(delta, om);
        const double nl = n_loc_from_transmittance(p.transmittance);
        const bool div = std::isinf(nl);
        t.row({format_number(delta), format_number(om), format_number(p.rho_ee), format_number(p.transmittance),
               div ? "0" : format_number(nl), div ? "1" : "0"});
      }
    ctx.write(t, "saturation_vs_omega.csv");
  }
  if (!c.rho_ee.empty()) {
    CsvTable t({"detuning", "rho_ee", "n_loc", "diverged"});
    ctx.provenance(t);
    for (double delta : c.detunings)
      for (double rho : c.rho_ee) {
        const auto e = n_loc_saturated(delta, rho);
        t.row({format_number(delta), format_number(rho), e.diverged() ? "0" : format_number(e.n_loc),
               e.diverged() ? "1" : "0"});
      }
    ctx.write(t, "nloc_vs_rho_ee.csv");
  }
}

inline WaveguideVariant hermitian_counterpart(WaveguideVariant v) {
  switch (v) {
    case WaveguideVariant::FullOpen: return WaveguideVariant::FullHermitian;
    case WaveguideVariant::HalfOpen: return WaveguideVariant::HalfHermitian;
    default: return v;
  }
}

inline WaveguideVariant open_counterpart(WaveguideVariant v) {
  switch (v) {
    case WaveguideVariant::FullHermitian: return WaveguideVariant::FullOpen;
    case WaveguideVariant::HalfHermitian: return WaveguideVariant::HalfOpen;
    default: return v;
  }
}

inline void run_eigenmodes(Context& ctx) {
  const auto& c = ctx.cfg;
  CsvTable frac({"n_atoms", "delocalized_fraction", "std_error", "realizations"});
  ctx.provenance(frac);
  std::vector<double> ns, fs;
  for (int n : c.n_atoms) {
    ctx.log("eigenmodes N=" + std::to_string(n));
    const auto s = disorder_averaged_spectrum(n, c.spacing, disorder_of(c, 0), c.realizations, c.seed, c.variant);
    CsvTable t({"mode", "frequency", "frequency_std_error", "decay_rate", "decay_rate_std_error", "participation"});
    ctx.provenance(t);
    for (std::size_t i = 0; i < s.mean_frequency.size(); ++i)
      t.row({std::to_string(i), format_number(s.mean_frequency[i]), format_number(s.frequency_stderr[i]),
             format_number(s.mean_decay[i]), format_number(s.decay_stderr[i]), format_number(s.mean_participation[i])});
    ctx.write(t, "spectrum_N" + std::to_string(n) + ".csv");
    frac.row({std::to_string(n), format_number(s.mean_delocalized_fraction),
              format_number(s.delocalized_fraction_stderr), std::to_string(s.n_realizations)});
    if (s.mean_delocalized_fraction > 0.0) {
      ns.push_back(n);
      fs.push_back(s.mean_delocalized_fraction);
    }
    if (c.overlap) {
      const auto g = sample_positions(n, c.spacing, disorder_of(c, 0));
      const auto d = overlap_matrix(build_model(g, open_counterpart(c.variant)),
                                    build_model(g, hermitian_counterpart(c.variant)));
      CsvTable o({"open_mode", "hermitian_mode", "overlap"});
      ctx.provenance(o);
      for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j)
          o.row({std::to_string(i), std::to_string(j), format_number(d(i, j))});
      ctx.write(o, "overlap_N" + std::to_string(n) + ".csv");
    }
  }
  ctx.write(frac, "delocalized_fraction.csv");
  if (ns.size() >= 2) {
    const auto fit = fit_power_law(ns, fs);
    ctx.manifest.summary["delocalized_fraction_exponent"] = fit.slope;
    ctx.manifest.summary["delocalized_fraction_exponent_std_error"] = fit.slope_stderr;
  }
}

/// One realization of closed transport or entropy.
inline SeriesMap closed_realization(const ExperimentConfig& c, int n_atoms, int n_exc, std::uint64_t r) {
  const auto basis = build_basis(n_atoms, n_exc);
  const auto model = build_model(sample_positions(n_atoms, c.spacing, disorder_of(c, r)), c.variant);
  const auto h = sector_hamiltonian(model, basis, n_exc, n_exc);
  const auto psi0 = initial_state(c, basis, n_exc, r);
  const auto e_init = product_sites(c, n_atoms, n_exc);
  const bool want_entropy = c.kind == ExperimentKind::Entropy ||
                            std::find(c.observables.begin(), c.observables.end(), "entropy") != c.observables.end();
  SeriesMap out;
  evolve_closed(h, psi0, propagation(c, MethodContract::NormPreservingClosed), [&](double, const StateVector& s) {
    population_observables(c, site_populations(s), e_init, out);
    if (want_entropy && n_atoms > 1) out["entropy"].push_back(half_chain_entropy(s, left_half_size(n_atoms)));
  });
  return out;
}

struct OpenRealization {
  SeriesMap values;
  SeriesMap trajectory_se;  ///< within-realization standard errors (jump method only)
  std::size_t trajectories = 0;
  std::size_t failed = 0;
};

inline bool use_master(const ExperimentConfig& c, int n_atoms, int n_exc) {
  if (c.open_method == "master") return true;
  if (c.open_method == "jumps") return false;
  return RestrictedBasis::dimension(n_atoms, n_exc) <= 600;
}

inline OpenRealization open_realization(const ExperimentConfig& c, int n_atoms, int n_exc, std::uint64_t r) {
  const auto basis = build_basis(n_atoms, n_exc);
  const auto model = build_model(sample_positions(n_atoms, c.spacing, disorder_of(c, r)), c.variant);
  const auto psi0 = initial_state(c, basis, n_exc, r);
  const auto e_init = product_sites(c, n_atoms, n_exc);
  OpenRealization out;
  if (use_master(c, n_atoms, n_exc)) {
    master_equation_evolve(model, DensityMatrix::pure(psi0), propagation(c, MethodContract::TracePreservingMaster),
                           [&](double, const DensityMatrix& rho) {
                             population_observables(c, site_populations(rho), e_init, out.values);
                           });
    return out;
  }
  const auto h = sector_hamiltonian(model, basis, 0, n_exc);
  // Per-trajectory samples: populations, then P_e, then M when defined.
  auto sampler = [&](const StateVector& s) {
    auto p = site_populations(s);
    const double pe = total_population(p);
    const double m = e_init ? memory_parameter(p, *e_init) : 0.0;
    p.push_back(pe);
    p.push_back(m);
    return p;
  };
  const auto ens = jump_ensemble(model, h, psi0, propagation(c, MethodContract::NormDecayingEffective), c.seed, r,
                                 c.trajectories, sampler, 1);
  out.trajectories = ens.n_trajectories;
  out.failed = ens.n_failed;
  const auto n = static_cast<std::size_t>(n_atoms);
  for (std::size_t s = 0; s < ens.mean.size(); ++s) {
    const std::vector<double> pops(ens.mean[s].begin(), ens.mean[s].begin() + static_cast<std::ptrdiff_t>(n));
    population_observables(c, pops, e_init, out.values);
    for (const auto& name : c.observables) {
      if (name == "site_populations")
        for (std::size_t i = 0; i < n; ++i) out.trajectory_se["p_" + std::to_string(i)].push_back(ens.std_error[s][i]);
      else if (name == "total_population")
        out.trajectory_se[name].push_back(ens.std_error[s][n]);
      else if (name == "memory" && e_init)
        out.trajectory_se[name].push_back(ens.std_error[s][n + 1]);
    }
  }
  return out;
}

/// Tidy CSV of realization-averaged series.
inline void write_series(Context& ctx, const std::string& file, const std::vector<double>& times,
                         const std::vector<SeriesMap>& per_realization, const std::vector<SeriesMap>& traj_se,
                         std::size_t trajectories) {
  std::map<std::string, SeriesStats> acc;
  std::map<std::string, SeriesStats> tacc;
  for (const auto& m : per_realization)
    for (const auto& [k, v] : m) acc[k].add(std::span<const std::optional<double>>(v));
  for (const auto& m : traj_se)
    for (const auto& [k, v] : m) tacc[k].add(std::span<const std::optional<double>>(v));
  CsvTable t({"time", "observable", "value", "std_error", "realizations", "trajectories", "defined",
              "trajectory_std_error"});
  ctx.provenance(t);
  for (const auto& [name, s] : acc) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto& st = s[i];
      const bool defined = st.count() > 0;
      std::string tse = "0";
      if (auto it = tacc.find(name); it != tacc.end() && it->second[i].count() > 0)
        tse = format_number(it->second[i].mean());
      t.row({format_number(times[i]), name, defined ? format_number(st.mean()) : "0",
             defined ? format_number(st.stderr_of_mean()) : "0", std::to_string(st.count()),
             std::to_string(trajectories), defined ? "1" : "0", tse});
    }
  }
  ctx.write(t, file);
}

inline void run_transport(Context& ctx) {
  const auto& c = ctx.cfg;
  const bool open = c.kind == ExperimentKind::TransportOpen;
  const auto times = sample_grid(c);
  for (int n : c.n_atoms) {
    for (int k : c.n_exc) {
      const std::string stem = "N" + std::to_string(n) + "_n" + std::to_string(k);
      Checkpoints cp(ctx.out / "partial" / stem, ctx.manifest.config_hash, ctx.opts.resume);
      std::vector<SeriesMap> vals(c.realizations), tse(c.realizations);
      std::vector<std::size_t> traj(c.realizations, 0), failed(c.realizations, 0);
      std::vector<char> resumed(c.realizations, 0);
      parallel_for(c.realizations, c.threads, [&](std::size_t r) {
        if (auto j = cp.load(r)) {
          vals[r] = series_from_json(j->at("values"));
          tse[r] = series_from_json(j->at("trajectory_std_error"));
          traj[r] = j->at("trajectories").get<std::size_t>();
          failed[r] = j->at("failed").get<std::size_t>();
          resumed[r] = 1;
          return;
        }
        if (open) {
          auto o = open_realization(c, n, k, r);
          vals[r] = std::move(o.values);
          tse[r] = std::move(o.trajectory_se);
          traj[r] = o.trajectories;
          failed[r] = o.failed;
        } else {
          vals[r] = closed_realization(c, n, k, r);
        }
        cp.store(r, {{"values", series_to_json(vals[r])},
                     {"trajectory_std_error", series_to_json(tse[r])},
                     {"trajectories", traj[r]},
                     {"failed", failed[r]}});
      });
      std::size_t total_failed = 0;
      for (std::size_t r = 0; r < c.realizations; ++r) {
        ctx.manifest.resumed_realizations += static_cast<std::size_t>(resumed[r]);
        total_failed += failed[r];
        if (failed[r])
          ctx.manifest.failures.push_back(stem + " realization " + std::to_string(r) + ": " +
                                          std::to_string(failed[r]) + " failed trajectories");
      }
      ctx.log(to_string(c.kind) + " " + stem + " done");
      write_series(ctx, to_string(c.kind) + "_" + stem + ".csv", times, vals, tse, open ? traj.front() : 0);
      ctx.manifest.summary[stem] = {{"realizations", c.realizations},
                                    {"trajectories_per_realization", open ? traj.front() : 0},
                                    {"failed_trajectories", total_failed},
                                    {"method", open ? (use_master(c, n, k) ? "master" : "jumps") : "closed"}};
    }
  }
}

inline RevivalExperimentConfig revival_config(const ExperimentConfig& c, int n_atoms, int n_exc) {
  RevivalExperimentConfig rc;
  rc.n_atoms = n_atoms;
  rc.n_exc = n_exc;
  rc.variant = c.variant;
  rc.ancilla = {c.coupling, c.coupled_atom};
  rc.spacing = c.spacing;
  rc.disorder = disorder_of(c, 0);
  rc.t_max = c.t_max;
  rc.n_realizations = c.realizations;
  rc.n_trajectories = c.trajectories;
  rc.seed = c.seed;
  if (c.initial.kind == InitialStateSpec::Kind::AncillaProduct) rc.load_sites = c.initial.sites;
  rc.counting.q_min = c.q_min;
  rc.counting.population_threshold = c.population_threshold;
  rc.counting.sampling_interval = c.sampling_interval;
  rc.counting.reset = c.minimum_reset == "since-detected" ? RevivalConfig::MinimumReset::SinceDetected
                                                          : RevivalConfig::MinimumReset::SinceAccepted;
  rc.tolerance = c.tolerance;
  rc.krylov_dim = c.krylov_dim;
  return rc;
}

inline nlohmann::json accepted_json(const std::vector<RevivalTrace>& traces) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& t : traces) a.push_back(t.accepted);
  return a;
}

inline void run_revivals(Context& ctx) {
  const auto& c = ctx.cfg;
  for (int n : c.n_atoms) {
    for (int k : c.n_exc) {
      const std::string stem = "N" + std::to_string(n) + "_n" + std::to_string(k);
      const auto rc = revival_config(c, n, k);
      validate(rc);
      const auto n_samples = static_cast<std::size_t>(std::llround(rc.t_max / rc.counting.sampling_interval)) + 1;
      const auto grid = PropagationConfig::uniform_grid(rc.t_max, n_samples);
      Checkpoints cp(ctx.out / "partial" / ("revivals_" + stem), ctx.manifest.config_hash, ctx.opts.resume);
      std::vector<RevivalRealization> per(c.realizations);
      std::vector<char> resumed(c.realizations, 0);
      parallel_for(c.realizations, c.threads, [&](std::size_t r) {
        if (auto j = cp.load(r)) {
          for (const auto& a : j->at("loaded")) per[r].loaded.push_back(trace_from_accepted(grid, a.get<std::vector<std::size_t>>()));
          for (const auto& a : j->at("reference")) per[r].reference.push_back(trace_from_accepted(grid, a.get<std::vector<std::size_t>>()));
          resumed[r] = 1;
          return;
        }
        per[r] = revival_realization(rc, r);
        cp.store(r, {{"loaded", accepted_json(per[r].loaded)}, {"reference", accepted_json(per[r].reference)}});
      });
      for (char x : resumed) ctx.manifest.resumed_realizations += static_cast<std::size_t>(x);
      const auto res = assemble_revivals(std::move(per));
      CsvTable t({"time", "rate", "rate_std_error", "reference_rate", "reference_rate_std_error", "o", "defined"});
      ctx.provenance(t);
      for (std::size_t i = 0; i < res.loaded.times.size(); ++i) {
        const auto& r = res.loaded.rate[i];
        const auto& r0 = res.reference.rate[i];
        const auto [ov, od] = optional_cells(res.o[i]);
        t.row({format_number(res.loaded.times[i]), r ? format_number(*r) : "0",
               res.loaded.rate_std_error[i] ? format_number(*res.loaded.rate_std_error[i]) : "0",
               r0 ? format_number(*r0) : "0",
               res.reference.rate_std_error[i] ? format_number(*res.reference.rate_std_error[i]) : "0", ov, od});
      }
      ctx.write(t, "revivals_" + stem + ".csv");
      RunningStats lc, rcn;
      for (int x : res.loaded_counts) lc.add(x);
      for (int x : res.reference_counts) rcn.add(x);
      ctx.manifest.summary[stem] = {{"mean_loaded_revivals", lc.mean()},
                                    {"mean_reference_revivals", rcn.mean()},
                                    {"traces", res.loaded_counts.size()}};
      ctx.log("revivals " + stem + " done");
    }
  }
}

/// Rejects sizes whose basis or operator cannot be built before any work starts.
inline void capacity_precheck(const ExperimentConfig& c) {
  const bool dyn = c.kind == ExperimentKind::TransportClosed || c.kind == ExperimentKind::TransportOpen ||
                   c.kind == ExperimentKind::Entropy || c.kind == ExperimentKind::Revivals;
  if (!dyn) return;
  for (int n : c.n_atoms) {
    if (n > kMaxAtoms) throw CapacityError("N=" + std::to_string(n) + " exceeds the atom limit");
    for (int k : c.n_exc) {
      const auto dim = RestrictedBasis::dimension(n, k);
      if (dim > kDefaultMaxDim)
        throw CapacityError("basis dimension " + std::to_string(dim) + " for N=" + std::to_string(n) +
                            ", n_exc=" + std::to_string(k) + " exceeds budget");
      std::uint64_t nnz = 0;
      const int lo = (c.kind == ExperimentKind::TransportClosed || c.kind == ExperimentKind::Entropy ||
                      (c.kind == ExperimentKind::Revivals && is_hermitian(c.variant)))
                         ? k
                         : 0;
      for (int s = lo; s <= k; ++s) nnz += sector_block_nonzeros(n, s);
      if (nnz > kDefaultMaxNonzeros)
        throw CapacityError("operator for N=" + std::to_string(n) + ", n_exc=" + std::to_string(k) + " needs " +
                            std::to_string(nnz) + " nonzeros");
      if (c.kind == ExperimentKind::TransportOpen && c.open_method == "master" && dim > 4096)
        throw CapacityError("dense master equation of dimension " + std::to_string(dim) + " is too large");
    }
  }
}

}  // namespace detail

/// Runs the experiment, writing config.json, CSV outputs and manifest.json into output_dir.
inline RunManifest run(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  detail::capacity_precheck(cfg);
  RunManifest m;
  m.config_hash = config_hash(cfg);
  m.master_seed = cfg.seed;
  const std::size_t n_real =
      (cfg.kind == ExperimentKind::SaturationCurve) ? 0 : cfg.realizations;
  for (std::size_t r = 0; r < n_real; ++r) m.realization_seeds.push_back(derive_seed(cfg.seed, r));
  const std::filesystem::path out(cfg.output_dir);
  std::filesystem::create_directories(out);
  write_file_atomic(out / "config.json", dump_config(cfg) + "\n");
  detail::Context ctx{cfg, opts, m, out};
  switch (cfg.kind) {
    case ExperimentKind::AndersonStats: detail::run_anderson(ctx); break;
    case ExperimentKind::SaturationCurve: detail::run_saturation(ctx); break;
    case ExperimentKind::Eigenmodes: detail::run_eigenmodes(ctx); break;
    case ExperimentKind::TransportClosed:
    case ExperimentKind::TransportOpen:
    case ExperimentKind::Entropy: detail::run_transport(ctx); break;
    case ExperimentKind::Revivals: detail::run_revivals(ctx); break;
  }
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file_atomic(out / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

}  // namespace wqed::harness
