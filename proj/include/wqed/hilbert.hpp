#pragma once

// Excitation-number-restricted basis for N two-level atoms.
//
// Basis states are occupation patterns (bit i set = atom i excited) with at
// most n_max excitations. Ordering: by excitation number k ascending, then by
// increasing integer value of the pattern within each k-sector, so every
// sector occupies one contiguous index range. Within a sector the index is the
// combinadic rank sum_m C(c_m, m+1) over the sorted excited sites c_0 < c_1 < ...

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wqed/errors.hpp"
#include "wqed/rng.hpp"

namespace wqed {

using cplx = std::complex<double>;

/// Practical ceiling on the number of atoms. Patterns live in 64 bits, but
/// C(34, 17) ~ 2.3e9 amplitudes is already far past any useful memory budget.
inline constexpr int kMaxAtoms = 34;

/// Default cap on basis dimension: 2^26 amplitudes, i.e. 1 GiB per complex vector.
inline constexpr std::size_t kDefaultMaxDim = std::size_t{1} << 26;

namespace detail {

struct BinomialTable {
  std::array<std::array<std::uint64_t, kMaxAtoms + 1>, kMaxAtoms + 1> c{};
  constexpr BinomialTable() {
    for (int n = 0; n <= kMaxAtoms; ++n) {
      c[n][0] = 1;
      for (int k = 1; k <= n; ++k) c[n][k] = c[n - 1][k - 1] + (k <= n - 1 ? c[n - 1][k] : 0);
    }
  }
};

inline constexpr BinomialTable kBinomials{};

}  // namespace detail

/// C(n, k) for 0 <= n <= 34; zero when k < 0 or k > n.
constexpr std::uint64_t binomial(int n, int k) noexcept {
  if (n < 0 || k < 0 || k > n || n > kMaxAtoms) return 0;
  return detail::kBinomials.c[n][k];
}

/// Set of excited atoms, stored as a bitmask.
class OccupationPattern {
 public:
  constexpr OccupationPattern() = default;
  constexpr explicit OccupationPattern(std::uint64_t bits) : bits_(bits) {}

  static OccupationPattern from_sites(std::span<const int> sites) {
    std::uint64_t bits = 0;
    for (int s : sites) {
      if (s < 0 || s >= kMaxAtoms) throw DomainError("site index out of range: " + std::to_string(s));
      if (bits & (std::uint64_t{1} << s)) throw DomainError("duplicate site " + std::to_string(s));
      bits |= std::uint64_t{1} << s;
    }
    return OccupationPattern(bits);
  }

  constexpr std::uint64_t bits() const noexcept { return bits_; }
  constexpr bool excited(int site) const noexcept { return (bits_ >> site) & 1U; }
  constexpr int count() const noexcept { return std::popcount(bits_); }

  std::vector<int> sites() const {
    std::vector<int> out;
    for (std::uint64_t b = bits_; b; b &= b - 1) out.push_back(std::countr_zero(b));
    return out;
  }

  /// Bit string with atom 0 rightmost, e.g. "001" for |e_0> on three atoms.
  std::string to_string(int n_atoms) const {
    std::string s(static_cast<std::size_t>(n_atoms), '0');
    for (int i = 0; i < n_atoms; ++i)
      if (excited(i)) s[static_cast<std::size_t>(n_atoms - 1 - i)] = '1';
    return s;
  }

  friend constexpr bool operator==(OccupationPattern, OccupationPattern) = default;

 private:
  std::uint64_t bits_ = 0;
};

/// Smallest pattern above `bits` with the same popcount (Gosper's hack).
constexpr std::uint64_t next_same_popcount(std::uint64_t bits) noexcept {
  const std::uint64_t c = bits & (~bits + 1);
  const std::uint64_t r = bits + c;
  return (((r ^ bits) >> 2) / c) | r;
}

class RestrictedBasis {
 public:
  RestrictedBasis(int n_atoms, int n_max, std::size_t max_dim = kDefaultMaxDim)
      : n_atoms_(n_atoms), n_max_(n_max) {
    if (n_atoms < 1 || n_atoms > kMaxAtoms)
      throw DomainError("n_atoms must lie in [1, " + std::to_string(kMaxAtoms) + "], got " +
                        std::to_string(n_atoms));
    if (n_max < 0 || n_max > n_atoms)
      throw DomainError("n_max must lie in [0, n_atoms], got " + std::to_string(n_max));
    offsets_.resize(static_cast<std::size_t>(n_max) + 2);
    offsets_[0] = 0;
    for (int k = 0; k <= n_max; ++k) offsets_[k + 1] = offsets_[k] + binomial(n_atoms, k);
    if (dim() > max_dim)
      throw CapacityError("basis dimension " + std::to_string(dim()) + " for (N=" +
                          std::to_string(n_atoms) + ", n_max=" + std::to_string(n_max) +
                          ") exceeds budget " + std::to_string(max_dim));
  }

  /// Dimension without constructing; used for capacity prechecks.
  static std::uint64_t dimension(int n_atoms, int n_max) {
    std::uint64_t d = 0;
    for (int k = 0; k <= n_max; ++k) d += binomial(n_atoms, k);
    return d;
  }

  int n_atoms() const noexcept { return n_atoms_; }
  int n_max() const noexcept { return n_max_; }
  std::size_t dim() const noexcept { return offsets_.back(); }

  std::size_t sector_begin(int k) const { return offsets_.at(static_cast<std::size_t>(k)); }
  std::size_t sector_end(int k) const { return offsets_.at(static_cast<std::size_t>(k) + 1); }
  std::size_t sector_size(int k) const { return sector_end(k) - sector_begin(k); }

  /// Excitation number of the basis state at `index`.
  int excitation(std::size_t index) const {
    int k = 0;
    while (index >= offsets_[static_cast<std::size_t>(k) + 1]) ++k;
    return k;
  }

  std::size_t rank(OccupationPattern p) const {
    const std::uint64_t bits = p.bits();
    if (n_atoms_ < 64 && (bits >> n_atoms_) != 0) throw DomainError("pattern has sites beyond n_atoms");
    const int k = p.count();
    if (k > n_max_) throw DomainError("pattern exceeds n_max excitations");
    return offsets_[static_cast<std::size_t>(k)] + rank_in_sector(bits);
  }

  OccupationPattern unrank(std::size_t index) const {
    if (index >= dim()) throw DomainError("basis index out of range: " + std::to_string(index));
    const int k = excitation(index);
    return OccupationPattern(unrank_in_sector(k, index - offsets_[static_cast<std::size_t>(k)]));
  }

  /// Combinadic rank of a pattern among patterns of equal popcount. No checks.
  std::size_t rank_in_sector(std::uint64_t bits) const noexcept {
    std::size_t r = 0;
    int m = 1;
    for (std::uint64_t b = bits; b; b &= b - 1, ++m) r += binomial(std::countr_zero(b), m);
    return r;
  }

  std::uint64_t unrank_in_sector(int k, std::size_t r) const noexcept {
    std::uint64_t bits = 0;
    int c = n_atoms_ - 1;
    for (int m = k; m >= 1; --m) {
      while (binomial(c, m) > r) --c;
      r -= binomial(c, m);
      bits |= std::uint64_t{1} << c;
      --c;
    }
    return bits;
  }

  /// Calls f(index, bits) for every state of sector k, in index order.
  template <class F>
  void for_each_in_sector(int k, F&& f) const {
    const std::size_t n = sector_size(k);
    std::uint64_t bits = (k == 0) ? 0 : ((std::uint64_t{1} << k) - 1);
    std::size_t idx = sector_begin(k);
    for (std::size_t r = 0; r < n; ++r, ++idx) {
      f(idx, bits);
      if (k > 0) bits = next_same_popcount(bits);
    }
  }

  template <class F>
  void for_each(F&& f) const {
    for (int k = 0; k <= n_max_; ++k) for_each_in_sector(k, f);
  }

 private:
  int n_atoms_;
  int n_max_;
  std::vector<std::size_t> offsets_;
};

using BasisPtr = std::shared_ptr<const RestrictedBasis>;

inline BasisPtr build_basis(int n_atoms, int n_max, std::size_t max_dim = kDefaultMaxDim) {
  if (n_max < 1) throw DomainError("n_max must be at least 1");
  return std::make_shared<const RestrictedBasis>(n_atoms, n_max, max_dim);
}

/// Complex amplitudes over a restricted basis.
class StateVector {
 public:
  explicit StateVector(BasisPtr basis)
      : basis_(std::move(basis)), amps_(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis_->dim()))) {}

  StateVector(BasisPtr basis, Eigen::VectorXcd amps) : basis_(std::move(basis)), amps_(std::move(amps)) {
    if (static_cast<std::size_t>(amps_.size()) != basis_->dim())
      throw DomainError("amplitude vector does not match basis dimension");
  }

  const RestrictedBasis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }

  Eigen::VectorXcd& amplitudes() noexcept { return amps_; }
  const Eigen::VectorXcd& amplitudes() const noexcept { return amps_; }

  cplx operator[](OccupationPattern p) const { return amps_[static_cast<Eigen::Index>(basis_->rank(p))]; }

  double norm() const { return amps_.norm(); }
  void normalize() {
    const double n = norm();
    if (n == 0.0) throw DomainError("cannot normalize the zero vector");
    amps_ /= n;
  }

  /// Lowest and highest excitation numbers carrying nonzero amplitude; {-1,-1} for the zero vector.
  std::pair<int, int> sector_support() const {
    int lo = -1, hi = -1;
    for (int k = 0; k <= basis_->n_max(); ++k) {
      const auto b = static_cast<Eigen::Index>(basis_->sector_begin(k));
      const auto n = static_cast<Eigen::Index>(basis_->sector_size(k));
      if (amps_.segment(b, n).squaredNorm() > 0.0) {
        if (lo < 0) lo = k;
        hi = k;
      }
    }
    return {lo, hi};
  }

 private:
  BasisPtr basis_;
  Eigen::VectorXcd amps_;
};

/// Dense density matrix over a restricted basis.
class DensityMatrix {
 public:
  explicit DensityMatrix(BasisPtr basis)
      : basis_(std::move(basis)),
        rho_(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(basis_->dim()),
                                    static_cast<Eigen::Index>(basis_->dim()))) {}

  DensityMatrix(BasisPtr basis, Eigen::MatrixXcd rho) : basis_(std::move(basis)), rho_(std::move(rho)) {
    const auto d = static_cast<Eigen::Index>(basis_->dim());
    if (rho_.rows() != d || rho_.cols() != d) throw DomainError("density matrix does not match basis dimension");
  }

  static DensityMatrix pure(const StateVector& psi) {
    return DensityMatrix(psi.basis_ptr(), psi.amplitudes() * psi.amplitudes().adjoint());
  }

  const RestrictedBasis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }
  Eigen::MatrixXcd& matrix() noexcept { return rho_; }
  const Eigen::MatrixXcd& matrix() const noexcept { return rho_; }

  double trace() const { return rho_.trace().real(); }
  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

 private:
  BasisPtr basis_;
  Eigen::MatrixXcd rho_;
};

inline StateVector prepare_product(std::span<const int> excited_sites, const BasisPtr& basis) {
  const auto p = OccupationPattern::from_sites(excited_sites);
  for (int s : excited_sites)
    if (s >= basis->n_atoms()) throw DomainError("site index beyond n_atoms: " + std::to_string(s));
  if (p.count() > basis->n_max()) throw DomainError("more excited sites than n_max");
  StateVector psi(basis);
  psi.amplitudes()[static_cast<Eigen::Index>(basis->rank(p))] = 1.0;
  return psi;
}

/// Equal-weight superposition of every pattern with exactly k excitations inside
/// `allowed_sites`, each carrying an independent uniform phase.
inline StateVector prepare_random_phase_superposition(std::span<const int> allowed_sites, int k, Rng& rng,
                                                      const BasisPtr& basis) {
  const auto allowed = OccupationPattern::from_sites(allowed_sites);
  for (int s : allowed_sites)
    if (s >= basis->n_atoms()) throw DomainError("site index beyond n_atoms: " + std::to_string(s));
  const int m = allowed.count();
  if (k < 0 || k > m || k > basis->n_max())
    throw DomainError("infeasible excitation count " + std::to_string(k) + " for " + std::to_string(m) +
                      " allowed sites");
  StateVector psi(basis);
  const double amp = 1.0 / std::sqrt(static_cast<double>(binomial(m, k)));
  // Phases are drawn in basis order so the stream consumption is fixed.
  basis->for_each_in_sector(k, [&](std::size_t idx, std::uint64_t bits) {
    if ((bits & ~allowed.bits()) != 0) return;
    const double phase = 2.0 * 3.14159265358979323846 * rng.uniform();
    psi.amplitudes()[static_cast<Eigen::Index>(idx)] = std::polar(amp, phase);
  });
  return psi;
}

/// sigma_eg^i sigma_ge^j |v>: moves an excitation from j to i (number operator when i == j).
inline StateVector apply_transfer(int i, int j, const StateVector& v) {
  const auto& basis = v.basis();
  if (i < 0 || j < 0 || i >= basis.n_atoms() || j >= basis.n_atoms()) throw DomainError("site out of range");
  StateVector out(v.basis_ptr());
  const std::uint64_t bi = std::uint64_t{1} << i, bj = std::uint64_t{1} << j;
  basis.for_each([&](std::size_t idx, std::uint64_t bits) {
    if (!(bits & bj)) return;
    if (i != j && (bits & bi)) return;
    const std::uint64_t q = (bits & ~bj) | bi;
    out.amplitudes()[static_cast<Eigen::Index>(basis.sector_begin(std::popcount(q)) + basis.rank_in_sector(q))] +=
        v.amplitudes()[static_cast<Eigen::Index>(idx)];
  });
  return out;
}

/// Lowers sector k of `in` into sector k-1 of `out` with sum_i w_i sigma_ge^i.
/// Both vectors are sector-local (length C(N,k) and C(N,k-1)); `out` is accumulated into.
inline void lower_sector(const RestrictedBasis& basis, int k, std::span<const cplx> weights,
                         const Eigen::Ref<const Eigen::VectorXcd>& in, Eigen::Ref<Eigen::VectorXcd> out) {
  const std::size_t base = basis.sector_begin(k);
  basis.for_each_in_sector(k, [&](std::size_t idx, std::uint64_t bits) {
    const cplx a = in[static_cast<Eigen::Index>(idx - base)];
    if (a == cplx{}) return;
    for (std::uint64_t b = bits; b; b &= b - 1) {
      const int site = std::countr_zero(b);
      const std::uint64_t q = bits & ~(std::uint64_t{1} << site);
      out[static_cast<Eigen::Index>(basis.rank_in_sector(q))] += weights[static_cast<std::size_t>(site)] * a;
    }
  });
}

/// (sum_i w_i sigma_ge^i) |v>.
inline StateVector apply_lowering(std::span<const cplx> weights, const StateVector& v) {
  const auto& basis = v.basis();
  if (static_cast<int>(weights.size()) != basis.n_atoms()) throw DomainError("one weight per atom required");
  StateVector out(v.basis_ptr());
  for (int k = 1; k <= basis.n_max(); ++k) {
    const auto b = static_cast<Eigen::Index>(basis.sector_begin(k));
    const auto n = static_cast<Eigen::Index>(basis.sector_size(k));
    const auto bo = static_cast<Eigen::Index>(basis.sector_begin(k - 1));
    const auto no = static_cast<Eigen::Index>(basis.sector_size(k - 1));
    lower_sector(basis, k, weights, v.amplitudes().segment(b, n), out.amplitudes().segment(bo, no));
  }
  return out;
}

}  // namespace wqed
