// Prints single-atom r, t and the localization length over a detuning grid,
// then the transmittance of one disordered chain.

#include <cstdio>

#include "wqed/scattering.hpp"

int main() {
  std::printf("%8s %12s %12s %12s %10s\n", "delta", "Re r", "Im r", "|t|^2", "N_loc");
  for (int i = 0; i <= 20; ++i) {
    const double delta = -2.5 + 0.25 * i;
    const auto p = wqed::single_atom_rt(delta);
    std::printf("%8.3f %12.6f %12.6f %12.6f %10.4f\n", delta, p.r.real(), p.r.imag(), std::norm(p.t),
                wqed::n_loc_linear(delta).n_loc);
  }
  wqed::DisorderSpec dis{wqed::DisorderKind::Full, 1.0, 7, 0};
  const auto geom = wqed::sample_positions(100, wqed::kDefaultSpacing, dis);
  std::printf("\nN=100, delta=1: log T_tot = %.6f\n", wqed::chain_transmittance(geom, 1.0).log_t);
}
