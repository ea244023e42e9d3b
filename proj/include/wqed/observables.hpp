#pragma once

// Observables measured on evolving states.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <bit>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wqed/errors.hpp"
#include "wqed/hilbert.hpp"

namespace wqed {

/// <sigma_ee^i> for every atom. The state is used as given (no renormalization),
/// so sum_i p_i is the excitation expectation times ||psi||^2.
inline std::vector<double> site_populations(const StateVector& psi) {
  const auto& basis = psi.basis();
  std::vector<double> p(static_cast<std::size_t>(basis.n_atoms()), 0.0);
  const auto& a = psi.amplitudes();
  basis.for_each([&](std::size_t idx, std::uint64_t bits) {
    const double w = std::norm(a[static_cast<Eigen::Index>(idx)]);
    if (w == 0.0) return;
    for (std::uint64_t b = bits; b; b &= b - 1) p[static_cast<std::size_t>(std::countr_zero(b))] += w;
  });
  return p;
}

/// Diagonal of rho summed per site. The vacuum is part of the basis, so a
/// trace-preserving evolution needs no renormalization here.
inline std::vector<double> site_populations(const DensityMatrix& rho) {
  const auto& basis = rho.basis();
  std::vector<double> p(static_cast<std::size_t>(basis.n_atoms()), 0.0);
  basis.for_each([&](std::size_t idx, std::uint64_t bits) {
    const double w = rho.matrix()(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx)).real();
    for (std::uint64_t b = bits; b; b &= b - 1) p[static_cast<std::size_t>(std::countr_zero(b))] += w;
  });
  return p;
}

/// P_e = sum_i p_i.
inline double total_population(std::span<const double> pops) {
  double s = 0.0;
  for (double x : pops) s += x;
  return s;
}

/// M = ((sum_{i in E} p_i)/n - n/N) / (1 - n/N) with n = |E|.
inline double memory_parameter(std::span<const double> pops, std::span<const int> e_init) {
  const auto n_atoms = static_cast<int>(pops.size());
  const auto n = static_cast<int>(e_init.size());
  if (n == 0) throw DomainError("memory parameter needs a nonempty initial set");
  if (n >= n_atoms) throw DomainError("memory parameter undefined when every site starts excited");
  double kept = 0.0;
  for (int s : e_init) {
    if (s < 0 || s >= n_atoms) throw DomainError("initial site out of range: " + std::to_string(s));
    kept += pops[static_cast<std::size_t>(s)];
  }
  const double f = static_cast<double>(n) / static_cast<double>(n_atoms);
  return (kept / n - f) / (1.0 - f);
}

/// Sites [0, left_half_size(N)) form the left half; for odd N the extra site is on the left.
inline int left_half_size(int n_atoms) { return (n_atoms + 1) / 2; }

/// (P_left - P_right)/P_e, or nullopt when P_e < 1e-12.
inline std::optional<double> half_imbalance(std::span<const double> pops) {
  const int n = static_cast<int>(pops.size());
  const int h = left_half_size(n);
  double left = 0.0, right = 0.0;
  for (int i = 0; i < n; ++i) (i < h ? left : right) += pops[static_cast<std::size_t>(i)];
  const double pe = left + right;
  if (pe < 1e-12) return std::nullopt;
  return (left - right) / pe;
}

/// Entanglement entropy (natural log) between sites [0, cut) and [cut, N).
///
/// Amplitudes are regrouped into blocks M_{kL,kR} indexed by the combinadic
/// ranks of the left and right patterns. A state confined to one excitation
/// sector has a block-diagonal reduced density matrix, so each block is
/// decomposed separately; mixed-sector states are assembled into one matrix.
inline double half_chain_entropy(const StateVector& psi, int cut) {
  const auto& basis = psi.basis();
  const int n = basis.n_atoms();
  if (cut < 1 || cut > n - 1) throw DomainError("entropy cut must lie in [1, N-1]");
  if (std::abs(psi.norm() - 1.0) > 1e-8) throw DomainError("entropy needs a normalized state");
  const auto [lo, hi] = psi.sector_support();
  if (lo < 0) throw DomainError("entropy of the zero vector");
  const int nr = n - cut;
  const std::uint64_t lmask = (std::uint64_t{1} << cut) - 1;
  const auto& a = psi.amplitudes();

  auto entropy_of = [](const Eigen::VectorXd& s) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s[i] < 1e-12) continue;
      const double p = s[i] * s[i];
      h -= p * std::log(p);
    }
    return h;
  };

  std::map<std::pair<int, int>, Eigen::MatrixXcd> blocks;
  for (int k = lo; k <= hi; ++k) {
    for (int kl = std::max(0, k - nr); kl <= std::min(k, cut); ++kl) {
      blocks.emplace(std::pair{kl, k - kl},
                     Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(binomial(cut, kl)),
                                            static_cast<Eigen::Index>(binomial(nr, k - kl))));
    }
    basis.for_each_in_sector(k, [&](std::size_t idx, std::uint64_t bits) {
      const std::uint64_t l = bits & lmask, r = bits >> cut;
      auto& m = blocks.at({std::popcount(l), std::popcount(r)});
      m(static_cast<Eigen::Index>(basis.rank_in_sector(l)), static_cast<Eigen::Index>(basis.rank_in_sector(r))) =
          a[static_cast<Eigen::Index>(idx)];
    });
  }

  if (lo == hi) {
    double h = 0.0;
    for (const auto& [key, m] : blocks) {
      if (m.size() == 0) continue;
      h += entropy_of(Eigen::BDCSVD<Eigen::MatrixXcd>(m).singularValues());
    }
    return h;
  }
  // Rows grouped by kL, columns by kR.
  std::vector<Eigen::Index> row_off(static_cast<std::size_t>(cut) + 2, 0), col_off(static_cast<std::size_t>(nr) + 2, 0);
  for (int kl = 0; kl <= cut; ++kl) row_off[kl + 1] = row_off[kl] + static_cast<Eigen::Index>(binomial(cut, kl));
  for (int kr = 0; kr <= nr; ++kr) col_off[kr + 1] = col_off[kr] + static_cast<Eigen::Index>(binomial(nr, kr));
  Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(row_off.back(), col_off.back());
  for (const auto& [key, m] : blocks)
    dense.block(row_off[key.first], col_off[key.second], m.rows(), m.cols()) += m;
  return entropy_of(Eigen::BDCSVD<Eigen::MatrixXcd>(dense).singularValues());
}

/// <sigma_ee^A> for one site, computed without forming the full population vector.
inline double ancilla_population(const StateVector& psi, int ancilla) {
  const auto& basis = psi.basis();
  if (ancilla < 0 || ancilla >= basis.n_atoms()) throw DomainError("ancilla index out of range");
  const std::uint64_t bit = std::uint64_t{1} << ancilla;
  double p = 0.0;
  basis.for_each([&](std::size_t idx, std::uint64_t bits) {
    if (bits & bit) p += std::norm(psi.amplitudes()[static_cast<Eigen::Index>(idx)]);
  });
  return p;
}

/// Declarative observable selection used by configs and output writers.
struct ObservableSpec {
  enum class Kind { SitePopulations, TotalPopulation, Memory, HalfImbalance, HalfChainEntropy, AncillaPopulation };
  Kind kind = Kind::SitePopulations;
  std::vector<int> e_init;  ///< Memory
  int cut = 0;              ///< HalfChainEntropy; 0 selects left_half_size(N)
  int ancilla = -1;         ///< AncillaPopulation

  void validate(int n_atoms) const {
    if (kind == Kind::Memory && e_init.empty()) throw DomainError("memory observable needs E_init");
    if (kind == Kind::HalfChainEntropy && cut != 0 && (cut < 1 || cut > n_atoms - 1))
      throw DomainError("entropy cut must lie in [1, N-1]");
    if (kind == Kind::AncillaPopulation && (ancilla < 0 || ancilla >= n_atoms))
      throw DomainError("ancilla index out of range");
  }
};

inline std::string to_string(ObservableSpec::Kind k) {
  switch (k) {
    case ObservableSpec::Kind::SitePopulations: return "site_populations";
    case ObservableSpec::Kind::TotalPopulation: return "total_population";
    case ObservableSpec::Kind::Memory: return "memory";
    case ObservableSpec::Kind::HalfImbalance: return "half_imbalance";
    case ObservableSpec::Kind::HalfChainEntropy: return "entropy";
    case ObservableSpec::Kind::AncillaPopulation: return "ancilla_population";
  }
  return "?";
}

inline ObservableSpec::Kind observable_kind_from_string(const std::string& s) {
  using K = ObservableSpec::Kind;
  for (K k : {K::SitePopulations, K::TotalPopulation, K::Memory, K::HalfImbalance, K::HalfChainEntropy,
              K::AncillaPopulation})
    if (to_string(k) == s) return k;
  throw DomainError("unknown observable '" + s + "'");
}

}  // namespace wqed
