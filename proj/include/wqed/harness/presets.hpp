#pragma once

// Named reference configurations. Ensemble sizes are the defaults
// and can be overridden from the CLI.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "wqed/harness/config.hpp"

namespace wqed::harness {

struct Preset {
  std::string name;
  std::string description;
  ExperimentConfig config;
};

namespace detail {

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

inline ExperimentConfig base(ExperimentKind kind, const std::string& name) {
  ExperimentConfig c;
  c.kind = kind;
  c.name = name;
  c.output_dir = "out/" + name;
  return c;
}

}  // namespace detail

inline std::vector<Preset> preset_library() {
  using K = ExperimentKind;
  using IK = InitialStateSpec::Kind;
  std::vector<Preset> out;

  {
    auto c = detail::base(K::TransportOpen, "single-atom-decay");
    c.n_atoms = {1};
    c.n_exc = {1};
    c.disorder = DisorderKind::None;
    c.variant = WaveguideVariant::FullOpen;
    c.initial = {IK::Product, {0}};
    c.t_max = 10.0;
    c.n_samples = 101;
    c.realizations = 1;
    c.observables = {"site_populations"};
    out.push_back({c.name, "excited population of one atom decaying at Gamma_1D", c});
  }
  {
    auto c = detail::base(K::AndersonStats, "fig2-anderson");
    c.n_atoms = {50, 200};
    c.detunings = detail::linspace(0.25, 3.0, 12);
    c.realizations = 10000;
    out.push_back({c.name, "mean and variance of log T_tot versus detuning against -N/N_loc and 2N/N_loc", c});
  }
  {
    auto c = detail::base(K::Eigenmodes, "fig2bc-spectrum");
    c.n_atoms = {100};
    c.variant = WaveguideVariant::FullOpen;
    c.realizations = 200;
    out.push_back({c.name, "disorder-averaged single-excitation frequencies and decay rates", c});
  }
  {
    auto c = detail::base(K::Eigenmodes, "fig2d-delocalized-fraction");
    c.n_atoms = {25, 50, 100, 200};
    c.variant = WaveguideVariant::FullOpen;
    c.realizations = 200;
    out.push_back({c.name, "fraction of modes with Gamma_xi > Gamma_1D/2 versus N, power-law fit", c});
  }
  {
    auto c = detail::base(K::Eigenmodes, "fig3-overlap");
    c.n_atoms = {150};
    c.variant = WaveguideVariant::FullOpen;
    c.realizations = 1;
    c.overlap = true;
    out.push_back({c.name, "overlap between open and Hermitian single-excitation modes", c});
  }
  {
    auto c = detail::base(K::TransportClosed, "fig4-ordered");
    c.n_atoms = {30};
    c.n_exc = {1, 3, 5};
    c.disorder = DisorderKind::None;
    c.realizations = 1;
    c.observables = {"memory", "site_populations"};
    out.push_back({c.name, "memory of equidistant product states without disorder", c});
  }
  {
    auto c = detail::base(K::TransportClosed, "fig4-disordered");
    c.n_atoms = {30};
    c.n_exc = {1, 3, 5};
    c.realizations = 50;
    c.observables = {"memory", "site_populations"};
    out.push_back({c.name, "disorder-averaged memory of equidistant product states", c});
  }
  {
    auto c = detail::base(K::TransportClosed, "fig4-reduced");
    c.n_atoms = {16};
    c.n_exc = {2};
    c.realizations = 20;
    c.observables = {"memory"};
    out.push_back({c.name, "reduced memory run (N=16, two excitations)", c});
  }
  {
    auto c = detail::base(K::Entropy, "fig5-entropy");
    c.n_atoms = {30};
    c.n_exc = {1, 2, 3, 4, 5};
    c.initial = {IK::LeftHalfRandomPhase, {}};
    c.realizations = 50;
    c.observables = {};
    out.push_back({c.name, "half-chain entanglement entropy growth", c});
  }
  {
    auto c = detail::base(K::Entropy, "fig6-entropy-n20");
    c.n_atoms = {20};
    c.n_exc = {1, 2, 3, 4, 5, 6, 7};
    c.initial = {IK::LeftHalfRandomPhase, {}};
    c.realizations = 20;
    c.observables = {};
    out.push_back({c.name, "entropy growth regimes up to seven excitations", c});
  }
  {
    auto c = detail::base(K::TransportOpen, "fig6-open");
    c.n_atoms = {24};
    c.n_exc = {1, 2, 4};
    c.variant = WaveguideVariant::HalfOpen;
    c.initial = {IK::LeftHalfRandomPhase, {}};
    c.realizations = 50;
    c.trajectories = 150;
    c.observables = {"half_imbalance", "total_population"};
    out.push_back({c.name, "imbalance and total population of the dissipative half waveguide", c});
  }
  {
    auto c = detail::base(K::TransportOpen, "fig6-open-n16");
    c.n_atoms = {16};
    c.n_exc = {6};
    c.variant = WaveguideVariant::HalfOpen;
    c.initial = {IK::LeftHalfRandomPhase, {}};
    c.realizations = 50;
    c.trajectories = 150;
    c.observables = {"half_imbalance", "total_population"};
    out.push_back({c.name, "dissipative imbalance at six excitations, N=16", c});
  }
  {
    auto c = detail::base(K::TransportOpen, "fig6-open-smoke");
    c.n_atoms = {12};
    c.n_exc = {4};
    c.variant = WaveguideVariant::HalfOpen;
    c.initial = {IK::LeftHalfRandomPhase, {}};
    c.realizations = 10;
    c.trajectories = 50;
    c.observables = {"half_imbalance", "total_population"};
    out.push_back({c.name, "smoke-scale dissipative imbalance (N=12, four excitations)", c});
  }
  {
    auto c = detail::base(K::Revivals, "fig7-revivals");
    c.n_atoms = {14, 17, 24};
    c.n_exc = {2, 3, 4, 6};
    c.variant = WaveguideVariant::HalfHermitian;
    c.initial = {IK::AncillaRandomPhase, {}};
    c.t_max = 300.0;
    c.realizations = 50;
    c.observables = {};
    out.push_back({c.name, "revival rates and O(t) for the Hermitian half waveguide", c});
  }
  {
    auto c = detail::base(K::Revivals, "fig7bc-loaded");
    c.n_atoms = {14};
    c.n_exc = {3};
    c.variant = WaveguideVariant::HalfHermitian;
    c.initial = {IK::AncillaProduct, {0, 3}};
    c.t_max = 300.0;
    c.realizations = 10;
    c.observables = {};
    out.push_back({c.name, "ancilla revivals with the waveguide loaded at the first and fourth atoms", c});
  }
  {
    auto c = detail::base(K::Revivals, "fig7-revivals-open");
    c.n_atoms = {14};
    c.n_exc = {2, 4};
    c.variant = WaveguideVariant::HalfOpen;
    c.initial = {IK::AncillaRandomPhase, {}};
    c.t_max = 300.0;
    c.realizations = 10;
    c.trajectories = 500;
    c.observables = {};
    out.push_back({c.name, "revival rates with dissipation", c});
  }
  {
    auto c = detail::base(K::SaturationCurve, "figSI-saturation");
    c.detunings = {1.0};
    c.omegas = detail::linspace(0.0, 5.0, 101);
    c.rho_ee = detail::linspace(0.0, 0.45, 91);
    out.push_back({c.name, "saturated single-atom response and localization length versus rho_ee", c});
  }
  return out;
}

inline const Preset* find_preset(const std::vector<Preset>& lib, const std::string& name) {
  for (const auto& p : lib)
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace wqed::harness
