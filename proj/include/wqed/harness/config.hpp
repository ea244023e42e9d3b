#pragma once

// Versioned JSON experiment configuration. Every field is normative and
// emitted by to_json, so a config round-trips through its text form.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "wqed/errors.hpp"
#include "wqed/model.hpp"
#include "wqed/observables.hpp"

namespace wqed::harness {

inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind { AndersonStats, SaturationCurve, Eigenmodes, TransportClosed, TransportOpen, Entropy, Revivals };

inline const std::vector<std::pair<ExperimentKind, std::string>>& experiment_names() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names{
      {ExperimentKind::AndersonStats, "anderson-stats"},   {ExperimentKind::SaturationCurve, "saturation-curve"},
      {ExperimentKind::Eigenmodes, "eigenmodes"},          {ExperimentKind::TransportClosed, "transport-closed"},
      {ExperimentKind::TransportOpen, "transport-open"},   {ExperimentKind::Entropy, "entropy"},
      {ExperimentKind::Revivals, "revivals"}};
  return names;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : experiment_names())
    if (kind == k) return name;
  return "?";
}

inline std::optional<ExperimentKind> experiment_from_string(const std::string& s) {
  for (const auto& [kind, name] : experiment_names())
    if (name == s) return kind;
  return std::nullopt;
}

struct InitialStateSpec {
  /// product: `sites` excited. equidistant: n_exc sites at floor((j + 1/2) N / n_exc).
  /// left-half-random-phase: random-phase superposition of n_exc excitations on the left half.
  /// ancilla-random-phase / ancilla-product: revival initial states (see revival_experiment).
  enum class Kind { Product, Equidistant, LeftHalfRandomPhase, AncillaRandomPhase, AncillaProduct };
  Kind kind = Kind::Equidistant;
  std::vector<int> sites;
};

inline const std::vector<std::pair<InitialStateSpec::Kind, std::string>>& initial_state_names() {
  using K = InitialStateSpec::Kind;
  static const std::vector<std::pair<K, std::string>> names{{K::Product, "product"},
                                                            {K::Equidistant, "equidistant"},
                                                            {K::LeftHalfRandomPhase, "left-half-random-phase"},
                                                            {K::AncillaRandomPhase, "ancilla-random-phase"},
                                                            {K::AncillaProduct, "ancilla-product"}};
  return names;
}

struct ExperimentConfig {
  int version = kSchemaVersion;
  ExperimentKind kind = ExperimentKind::TransportClosed;
  std::string name = "unnamed";

  // Geometry. For revivals n_atoms counts the ancilla.
  std::vector<int> n_atoms{30};
  double spacing = kDefaultSpacing;
  DisorderKind disorder = DisorderKind::Full;
  double disorder_width = 1.0;
  WaveguideVariant variant = WaveguideVariant::FullHermitian;

  InitialStateSpec initial{};
  std::vector<int> n_exc{1};

  // Solver.
  double t_max = 100.0;
  int n_samples = 400;
  double tolerance = 1e-8;
  int krylov_dim = 30;
  /// "auto" uses the master equation when the dense density matrix has dimension <= 600.
  std::string open_method = "auto";

  // Ensemble.
  std::size_t realizations = 50;
  std::size_t trajectories = 150;

  std::vector<std::string> observables{"memory"};

  // Scattering experiments.
  std::vector<double> detunings{1.0};
  std::vector<double> omegas{};
  std::vector<double> rho_ee{};

  // Eigenmodes.
  bool overlap = false;

  // Revivals.
  double q_min = 0.4;
  double population_threshold = 0.25;
  double sampling_interval = 0.05;
  std::string minimum_reset = "since-accepted";
  double coupling = 0.5;
  int coupled_atom = 2;

  std::uint64_t seed = 1;
  std::string output_dir = "out";
  unsigned threads = 1;
};

inline std::string disorder_name(DisorderKind k) {
  switch (k) {
    case DisorderKind::None: return "none";
    case DisorderKind::Full: return "full";
    case DisorderKind::Uniform: return "uniform";
  }
  return "?";
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  std::string init;
  for (const auto& [k, n] : initial_state_names())
    if (k == c.initial.kind) init = n;
  return json{
      {"version", c.version},
      {"experiment", to_string(c.kind)},
      {"name", c.name},
      {"geometry",
       {{"n_atoms", c.n_atoms},
        {"spacing", c.spacing},
        {"disorder", disorder_name(c.disorder)},
        {"disorder_width", c.disorder_width}}},
      {"variant", to_string(c.variant)},
      {"initial_state", {{"kind", init}, {"sites", c.initial.sites}}},
      {"n_exc", c.n_exc},
      {"solver",
       {{"t_max", c.t_max},
        {"n_samples", c.n_samples},
        {"tolerance", c.tolerance},
        {"krylov_dim", c.krylov_dim},
        {"open_method", c.open_method}}},
      {"ensemble", {{"realizations", c.realizations}, {"trajectories", c.trajectories}}},
      {"observables", c.observables},
      {"scattering", {{"detunings", c.detunings}, {"omegas", c.omegas}, {"rho_ee", c.rho_ee}}},
      {"spectrum", {{"overlap", c.overlap}}},
      {"revival",
       {{"q_min", c.q_min},
        {"population_threshold", c.population_threshold},
        {"sampling_interval", c.sampling_interval},
        {"minimum_reset", c.minimum_reset},
        {"coupling", c.coupling},
        {"coupled_atom", c.coupled_atom}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"threads", c.threads},
  };
}

namespace detail {

/// Reads fields out of a JSON object and records every problem with its path.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  void issue(const std::string& path, const std::string& msg) { issues_.push_back(path + ": " + msg); }

  void unknown_keys(const nlohmann::json& obj, const std::string& path, const std::set<std::string>& known) {
    if (!obj.is_object()) return;
    for (const auto& [k, v] : obj.items())
      if (!known.count(k)) issue(path + "/" + k, "unknown field");
  }

  const nlohmann::json* object(const nlohmann::json& parent, const std::string& key, const std::string& path) {
    if (!parent.contains(key)) return nullptr;
    const auto& v = parent.at(key);
    if (!v.is_object()) {
      issue(path + "/" + key, "expected an object");
      return nullptr;
    }
    return &v;
  }

  template <class T>
  void read(const nlohmann::json* parent, const std::string& key, const std::string& path, T& out) {
    if (!parent || !parent->contains(key)) return;
    const auto& v = parent->at(key);
    const std::string p = path + "/" + key;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0 && !v.is_number_unsigned())
          throw std::invalid_argument("expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      issue(p, e.what());
    }
  }

  template <class T>
  void read_list(const nlohmann::json* parent, const std::string& key, const std::string& path, std::vector<T>& out) {
    if (!parent || !parent->contains(key)) return;
    const auto& v = parent->at(key);
    const std::string p = path + "/" + key;
    if (!v.is_array()) {
      issue(p, "expected an array");
      return;
    }
    std::vector<T> tmp;
    for (std::size_t i = 0; i < v.size(); ++i) {
      T x{};
      nlohmann::json wrap{{"v", v[i]}};
      const std::size_t before = issues_.size();
      read(&wrap, "v", p, x);
      if (issues_.size() != before) {
        issues_.back() = p + "/" + std::to_string(i) + issues_.back().substr((p + "/v").size());
        return;
      }
      tmp.push_back(x);
    }
    out = std::move(tmp);
  }

 private:
  std::vector<std::string>& issues_;
};

}  // namespace detail

/// Parses and validates; throws ConfigError listing every violation as "<json-pointer>: <message>".
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  std::vector<std::string> issues;
  detail::Reader rd(issues);
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError({": config must be a JSON object"});
  rd.unknown_keys(j, "", {"version", "experiment", "name", "geometry", "variant", "initial_state", "n_exc", "solver",
                          "ensemble", "observables", "scattering", "spectrum", "revival", "seed", "output_dir",
                          "threads"});
  if (!j.contains("version")) {
    rd.issue("/version", "missing");
  } else {
    rd.read(&j, "version", "", c.version);
    if (c.version != kSchemaVersion) rd.issue("/version", "unsupported schema version " + std::to_string(c.version));
  }
  if (!j.contains("experiment")) {
    rd.issue("/experiment", "missing");
  } else {
    std::string e;
    rd.read(&j, "experiment", "", e);
    if (auto k = experiment_from_string(e)) c.kind = *k;
    else if (!e.empty()) rd.issue("/experiment", "unknown experiment '" + e + "'");
  }
  rd.read(&j, "name", "", c.name);

  if (const auto* g = rd.object(j, "geometry", "")) {
    rd.unknown_keys(*g, "/geometry", {"n_atoms", "spacing", "disorder", "disorder_width"});
    rd.read_list(g, "n_atoms", "/geometry", c.n_atoms);
    rd.read(g, "spacing", "/geometry", c.spacing);
    std::string d = disorder_name(c.disorder);
    rd.read(g, "disorder", "/geometry", d);
    if (d == "none") c.disorder = DisorderKind::None;
    else if (d == "full") c.disorder = DisorderKind::Full;
    else if (d == "uniform") c.disorder = DisorderKind::Uniform;
    else rd.issue("/geometry/disorder", "expected none, full or uniform");
    rd.read(g, "disorder_width", "/geometry", c.disorder_width);
  }
  {
    std::string v = to_string(c.variant);
    rd.read(&j, "variant", "", v);
    try {
      c.variant = variant_from_string(v);
    } catch (const DomainError& e) {
      rd.issue("/variant", e.what());
    }
  }
  if (const auto* s = rd.object(j, "initial_state", "")) {
    rd.unknown_keys(*s, "/initial_state", {"kind", "sites"});
    std::string k;
    rd.read(s, "kind", "/initial_state", k);
    if (!k.empty()) {
      bool found = false;
      for (const auto& [kind, name] : initial_state_names())
        if (name == k) {
          c.initial.kind = kind;
          found = true;
        }
      if (!found) rd.issue("/initial_state/kind", "unknown initial state '" + k + "'");
    }
    rd.read_list(s, "sites", "/initial_state", c.initial.sites);
  }
  rd.read_list(&j, "n_exc", "", c.n_exc);
  if (const auto* s = rd.object(j, "solver", "")) {
    rd.unknown_keys(*s, "/solver", {"t_max", "n_samples", "tolerance", "krylov_dim", "open_method"});
    rd.read(s, "t_max", "/solver", c.t_max);
    rd.read(s, "n_samples", "/solver", c.n_samples);
    rd.read(s, "tolerance", "/solver", c.tolerance);
    rd.read(s, "krylov_dim", "/solver", c.krylov_dim);
    rd.read(s, "open_method", "/solver", c.open_method);
  }
  if (const auto* s = rd.object(j, "ensemble", "")) {
    rd.unknown_keys(*s, "/ensemble", {"realizations", "trajectories"});
    rd.read(s, "realizations", "/ensemble", c.realizations);
    rd.read(s, "trajectories", "/ensemble", c.trajectories);
  }
  rd.read_list(&j, "observables", "", c.observables);
  if (const auto* s = rd.object(j, "scattering", "")) {
    rd.unknown_keys(*s, "/scattering", {"detunings", "omegas", "rho_ee"});
    rd.read_list(s, "detunings", "/scattering", c.detunings);
    rd.read_list(s, "omegas", "/scattering", c.omegas);
    rd.read_list(s, "rho_ee", "/scattering", c.rho_ee);
  }
  if (const auto* s = rd.object(j, "spectrum", "")) {
    rd.unknown_keys(*s, "/spectrum", {"overlap"});
    rd.read(s, "overlap", "/spectrum", c.overlap);
  }
  if (const auto* s = rd.object(j, "revival", "")) {
    rd.unknown_keys(*s, "/revival",
                    {"q_min", "population_threshold", "sampling_interval", "minimum_reset", "coupling", "coupled_atom"});
    rd.read(s, "q_min", "/revival", c.q_min);
    rd.read(s, "population_threshold", "/revival", c.population_threshold);
    rd.read(s, "sampling_interval", "/revival", c.sampling_interval);
    rd.read(s, "minimum_reset", "/revival", c.minimum_reset);
    rd.read(s, "coupling", "/revival", c.coupling);
    rd.read(s, "coupled_atom", "/revival", c.coupled_atom);
  }
  rd.read(&j, "seed", "", c.seed);
  rd.read(&j, "output_dir", "", c.output_dir);
  rd.read(&j, "threads", "", c.threads);

  // Semantic checks.
  if (c.n_atoms.empty()) rd.issue("/geometry/n_atoms", "needs at least one size");
  for (std::size_t i = 0; i < c.n_atoms.size(); ++i)
    if (c.n_atoms[i] < 1) rd.issue("/geometry/n_atoms/" + std::to_string(i), "must be positive");
  if (!(c.spacing > 0.0)) rd.issue("/geometry/spacing", "must be positive");
  if (c.disorder_width < 0.0) rd.issue("/geometry/disorder_width", "must be non-negative");
  const bool dynamic = c.kind == ExperimentKind::TransportClosed || c.kind == ExperimentKind::TransportOpen ||
                       c.kind == ExperimentKind::Entropy || c.kind == ExperimentKind::Revivals;
  if (dynamic) {
    if (c.n_exc.empty()) rd.issue("/n_exc", "needs at least one excitation number");
    for (std::size_t i = 0; i < c.n_exc.size(); ++i)
      for (int n : c.n_atoms)
        if (c.n_exc[i] < 1 || c.n_exc[i] > n)
          rd.issue("/n_exc/" + std::to_string(i), "must lie in [1, N] for N=" + std::to_string(n));
    if (!(c.t_max > 0.0)) rd.issue("/solver/t_max", "must be positive");
    if (c.n_samples < 2) rd.issue("/solver/n_samples", "needs at least two samples");
    if (!(c.tolerance > 0.0 && c.tolerance < 1.0)) rd.issue("/solver/tolerance", "must lie in (0, 1)");
    if (c.krylov_dim < 2) rd.issue("/solver/krylov_dim", "must be at least 2");
  }
  if (c.open_method != "auto" && c.open_method != "master" && c.open_method != "jumps")
    rd.issue("/solver/open_method", "expected auto, master or jumps");
  if (c.realizations < 1) rd.issue("/ensemble/realizations", "must be at least 1");
  if (c.kind == ExperimentKind::AndersonStats && c.realizations < 2)
    rd.issue("/ensemble/realizations", "variance needs at least 2 realizations");
  if (c.trajectories < 1) rd.issue("/ensemble/trajectories", "must be at least 1");
  for (std::size_t i = 0; i < c.observables.size(); ++i) {
    try {
      observable_kind_from_string(c.observables[i]);
    } catch (const DomainError& e) {
      rd.issue("/observables/" + std::to_string(i), e.what());
    }
  }
  const bool open_kind = c.kind == ExperimentKind::TransportOpen;
  const bool closed_kind = c.kind == ExperimentKind::TransportClosed || c.kind == ExperimentKind::Entropy;
  if (open_kind && is_hermitian(c.variant)) rd.issue("/variant", "transport-open needs an open variant");
  if (closed_kind && !is_hermitian(c.variant)) rd.issue("/variant", "closed evolution needs a Hermitian variant");
  if (c.kind == ExperimentKind::Revivals && !is_half(c.variant)) rd.issue("/variant", "revivals use a half waveguide");
  using IK = InitialStateSpec::Kind;
  if (c.initial.kind == IK::Product) {
    for (std::size_t i = 0; i < c.n_exc.size(); ++i)
      if (c.n_exc[i] != static_cast<int>(c.initial.sites.size()))
        rd.issue("/initial_state/sites", "product state needs exactly n_exc sites");
    for (std::size_t i = 0; i < c.initial.sites.size(); ++i)
      for (int n : c.n_atoms)
        if (c.initial.sites[i] < 0 || c.initial.sites[i] >= n)
          rd.issue("/initial_state/sites/" + std::to_string(i), "out of range for N=" + std::to_string(n));
  }
  if (c.initial.kind == IK::AncillaProduct)
    for (int k : c.n_exc)
      if (k - 1 != static_cast<int>(c.initial.sites.size()))
        rd.issue("/initial_state/sites", "ancilla-product needs n_exc - 1 waveguide sites");
  if (c.initial.kind == IK::LeftHalfRandomPhase)
    for (int n : c.n_atoms)
      for (int k : c.n_exc)
        if (k > left_half_size(n)) rd.issue("/n_exc", "more excitations than left-half sites");
  if (c.kind == ExperimentKind::Revivals) {
    if (c.initial.kind != IK::AncillaRandomPhase && c.initial.kind != IK::AncillaProduct)
      rd.issue("/initial_state/kind", "revivals need an ancilla initial state");
    if (!(c.q_min > 0.0)) rd.issue("/revival/q_min", "must be positive");
    if (!(c.population_threshold > 0.0 && c.population_threshold < 1.0))
      rd.issue("/revival/population_threshold", "must lie in (0, 1)");
    if (!(c.sampling_interval > 0.0)) rd.issue("/revival/sampling_interval", "must be positive");
    if (c.minimum_reset != "since-accepted" && c.minimum_reset != "since-detected")
      rd.issue("/revival/minimum_reset", "expected since-accepted or since-detected");
    for (int n : c.n_atoms)
      if (c.coupled_atom < 0 || c.coupled_atom >= n - 1)
        rd.issue("/revival/coupled_atom", "must index a waveguide atom");
  } else if (c.initial.kind == IK::AncillaRandomPhase || c.initial.kind == IK::AncillaProduct) {
    rd.issue("/initial_state/kind", "ancilla initial states belong to revival runs");
  }
  if ((c.kind == ExperimentKind::TransportClosed || c.kind == ExperimentKind::TransportOpen) &&
      c.initial.kind == IK::LeftHalfRandomPhase)
    for (const auto& o : c.observables)
      if (o == "memory") rd.issue("/observables", "memory needs a product initial state");
  if (c.kind == ExperimentKind::SaturationCurve && c.omegas.empty() && c.rho_ee.empty())
    rd.issue("/scattering", "needs omegas or rho_ee");
  for (std::size_t i = 0; i < c.omegas.size(); ++i)
    if (c.omegas[i] < 0.0) rd.issue("/scattering/omegas/" + std::to_string(i), "must be non-negative");
  for (std::size_t i = 0; i < c.rho_ee.size(); ++i)
    if (c.rho_ee[i] < 0.0 || c.rho_ee[i] > 0.5) rd.issue("/scattering/rho_ee/" + std::to_string(i), "must lie in [0, 1/2]");

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

inline ExperimentConfig load_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string(": ") + e.what()});
  }
  return config_from_json(j);
}

/// Canonical text form (sorted keys, 2-space indent).
inline std::string dump_config(const ExperimentConfig& c) { return to_json(c).dump(2); }

/// FNV-1a 64 of the canonical compact dump, excluding fields that do not affect results.
inline std::string config_hash(const ExperimentConfig& c) {
  auto j = to_json(c);
  j.erase("output_dir");
  j.erase("threads");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// A valid starting configuration for each experiment kind.
inline ExperimentConfig default_config(ExperimentKind kind) {
  using IK = InitialStateSpec::Kind;
  ExperimentConfig c;
  c.kind = kind;
  c.name = to_string(kind);
  switch (kind) {
    case ExperimentKind::AndersonStats: break;
    case ExperimentKind::SaturationCurve:
      c.omegas = {0.0, 0.5, 1.0, 2.0, 4.0};
      c.rho_ee = {0.0, 0.125, 0.25, 0.375, 0.45};
      break;
    case ExperimentKind::Eigenmodes: c.variant = WaveguideVariant::FullOpen; break;
    case ExperimentKind::TransportClosed: break;
    case ExperimentKind::TransportOpen:
      c.variant = WaveguideVariant::HalfOpen;
      c.n_atoms = {12};
      c.n_exc = {2};
      c.observables = {"memory", "total_population"};
      break;
    case ExperimentKind::Entropy:
      c.initial = {IK::LeftHalfRandomPhase, {}};
      c.n_atoms = {14};
      c.n_exc = {2};
      c.observables = {};
      break;
    case ExperimentKind::Revivals:
      c.variant = WaveguideVariant::HalfHermitian;
      c.initial = {IK::AncillaRandomPhase, {}};
      c.n_atoms = {14};
      c.n_exc = {2};
      c.t_max = 300.0;
      c.observables = {};
      break;
  }
  return c;
}

}  // namespace wqed::harness
