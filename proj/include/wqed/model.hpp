#pragma once

// Effective spin models obtained by integrating out the waveguide photons.
//
// Internal units: Gamma_1D = 1, k_1D = 1. Time is measured in 1/Gamma_1D and
// lengths in 1/k_1D. The many-body Hamiltonian is
//     H = sum_{ij} K_ij sigma_eg^i sigma_ge^j
// with an N x N kernel K; the open variants additionally carry the decay
// matrix Gamma_ij entering the dissipator sum_ij Gamma_ij sigma_ge^i rho sigma_eg^j.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wqed/errors.hpp"
#include "wqed/hilbert.hpp"
#include "wqed/rng.hpp"

namespace wqed {

/// Mean spacing d = 2.7 pi / k_1D used throughout the numerics.
inline constexpr double kDefaultSpacing = 2.7 * std::numbers::pi;

enum class DisorderKind { None, Full, Uniform };

/// Position disorder z_i = (i + eps_i) d. Full: eps ~ U[-1/2, 1/2]; Uniform: eps ~ U[-w/2, w/2].
struct DisorderSpec {
  DisorderKind kind = DisorderKind::Full;
  double width = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t realization = 0;

  static DisorderSpec ordered() { return {DisorderKind::None, 0.0, 0, 0}; }
  static DisorderSpec full(std::uint64_t seed, std::uint64_t realization = 0) {
    return {DisorderKind::Full, 1.0, seed, realization};
  }

  /// Stream that generates the eps_i of this realization.
  Rng stream() const { return Rng(derive_seed(derive_seed(seed, realization), 0)); }
};

struct Geometry {
  double spacing = kDefaultSpacing;
  double k1d = 1.0;
  std::vector<double> positions;

  int n_atoms() const noexcept { return static_cast<int>(positions.size()); }
};

enum class WaveguideVariant { FullOpen, HalfOpen, FullHermitian, HalfHermitian };

constexpr bool is_hermitian(WaveguideVariant v) noexcept {
  return v == WaveguideVariant::FullHermitian || v == WaveguideVariant::HalfHermitian;
}
constexpr bool is_half(WaveguideVariant v) noexcept {
  return v == WaveguideVariant::HalfOpen || v == WaveguideVariant::HalfHermitian;
}

inline std::string to_string(WaveguideVariant v) {
  switch (v) {
    case WaveguideVariant::FullOpen: return "full-open";
    case WaveguideVariant::HalfOpen: return "half-open";
    case WaveguideVariant::FullHermitian: return "full-hermitian";
    case WaveguideVariant::HalfHermitian: return "half-hermitian";
  }
  return "?";
}

inline WaveguideVariant variant_from_string(const std::string& s) {
  if (s == "full-open") return WaveguideVariant::FullOpen;
  if (s == "half-open") return WaveguideVariant::HalfOpen;
  if (s == "full-hermitian") return WaveguideVariant::FullHermitian;
  if (s == "half-hermitian") return WaveguideVariant::HalfHermitian;
  throw DomainError("unknown waveguide variant '" + s + "'");
}

/// One Lindblad channel: rate * L rho L^dagger with L = sum_i weights_i sigma_ge^i.
struct JumpChannel {
  double rate = 0.0;
  Eigen::VectorXcd weights;
};

struct ModelMatrices {
  WaveguideVariant variant = WaveguideVariant::FullOpen;
  double gamma_1d = 1.0;
  Eigen::MatrixXcd kernel;
  Eigen::MatrixXd gamma;
  std::vector<JumpChannel> jumps;
  /// Set by attach_ancilla: index of the ancilla and of the waveguide atom it couples to.
  std::optional<int> ancilla;
  std::optional<int> coupled_atom;

  int n_atoms() const noexcept { return static_cast<int>(kernel.rows()); }
};

struct AncillaSpec {
  double coupling = 0.5;
  /// 0-based index of the coupled waveguide atom; 2 is the third atom from the mirror.
  int coupled_atom = 2;
};

/// Positions z_i = (i + eps_i) d for i = 1..N, stored at array index i-1.
inline Geometry sample_positions(int n_atoms, double spacing, const DisorderSpec& disorder) {
  if (n_atoms < 1) throw DomainError("need at least one atom");
  if (!(spacing > 0.0)) throw DomainError("spacing must be positive");
  Geometry g;
  g.spacing = spacing;
  g.positions.resize(static_cast<std::size_t>(n_atoms));
  Rng rng = disorder.stream();
  double half_width = 0.0;
  switch (disorder.kind) {
    case DisorderKind::None: half_width = 0.0; break;
    case DisorderKind::Full: half_width = 0.5; break;
    case DisorderKind::Uniform:
      if (disorder.width < 0.0 || disorder.width > 1.0) throw DomainError("disorder width must lie in [0, 1]");
      half_width = 0.5 * disorder.width;
      break;
  }
  for (int i = 0; i < n_atoms; ++i) {
    const double eps = half_width > 0.0 ? rng.uniform(-half_width, half_width) : 0.0;
    g.positions[static_cast<std::size_t>(i)] = (static_cast<double>(i + 1) + eps) * spacing;
  }
  return g;
}

/// Eigen-decomposes Gamma into Lindblad channels, dropping rates below 1e-10 Gamma_1D.
inline std::vector<JumpChannel> jump_decomposition(const Eigen::MatrixXd& gamma, double gamma_1d = 1.0) {
  std::vector<JumpChannel> out;
  if (gamma.size() == 0) return out;
  if ((gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, gamma.cwiseAbs().maxCoeff()))
    throw DomainError("decay matrix is not symmetric");
  const double clamp = 1e-10 * gamma_1d;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of decay matrix failed");
  // Largest rate first.
  for (Eigen::Index m = es.eigenvalues().size() - 1; m >= 0; --m) {
    const double lam = es.eigenvalues()[m];
    if (lam < -clamp) throw NumericalError("decay matrix has negative eigenvalue " + std::to_string(lam));
    if (lam <= clamp) continue;
    out.push_back({lam, es.eigenvectors().col(m).cast<cplx>()});
  }
  return out;
}

inline ModelMatrices build_model(const Geometry& geom, WaveguideVariant variant) {
  const int n = geom.n_atoms();
  if (n < 1) throw DomainError("geometry has no atoms");
  for (int i = 1; i < n; ++i)
    if (!(geom.positions[i] > geom.positions[i - 1])) throw DomainError("positions must be strictly ascending");
  if (is_half(variant) && !(geom.positions.front() > 0.0))
    throw DomainError("half-waveguide requires z_i > 0 (mirror at z = 0)");

  ModelMatrices m;
  m.variant = variant;
  m.kernel.resize(n, n);
  m.gamma.resize(n, n);
  const double k = geom.k1d;
  const double g = m.gamma_1d;
  const cplx minus_i_half(0.0, -0.5 * g);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double zi = geom.positions[i], zj = geom.positions[j];
      const double diff = k * std::abs(zi - zj);
      const double sum = k * (zi + zj);
      cplx kij;
      double gij;
      if (is_half(variant)) {
        kij = minus_i_half * (std::polar(1.0, -diff) - std::polar(1.0, -sum));
        gij = g * (std::cos(diff) - std::cos(sum));
      } else {
        kij = minus_i_half * std::polar(1.0, -diff);
        gij = g * std::cos(diff);
      }
      m.kernel(i, j) = kij;
      m.gamma(i, j) = gij;
    }
  }
  if (is_hermitian(variant)) {
    // Hermitian component (H + H^dagger)/2 of the open model.
    m.kernel = m.kernel.real().cast<cplx>();
    m.gamma.setZero();
  } else {
    m.jumps = jump_decomposition(m.gamma, g);
  }
  return m;
}

/// Entrywise Hermitian part (K + K^dagger)/2 of a kernel.
inline Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& kernel) {
  return (kernel + kernel.adjoint()) / 2.0;
}

/// Appends an ancilla atom (last index) exchanging excitations with `coupled_atom` at rate C.
/// The ancilla neither radiates nor couples to the waveguide.
inline ModelMatrices attach_ancilla(const ModelMatrices& model, const AncillaSpec& spec) {
  const int n = model.n_atoms();
  if (spec.coupled_atom < 0 || spec.coupled_atom >= n)
    throw DomainError("coupled atom index " + std::to_string(spec.coupled_atom) + " out of range");
  if (model.ancilla) throw DomainError("model already has an ancilla");
  ModelMatrices out;
  out.variant = model.variant;
  out.gamma_1d = model.gamma_1d;
  out.kernel = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  out.kernel.topLeftCorner(n, n) = model.kernel;
  out.kernel(n, spec.coupled_atom) = spec.coupling;
  out.kernel(spec.coupled_atom, n) = spec.coupling;
  out.gamma = Eigen::MatrixXd::Zero(n + 1, n + 1);
  out.gamma.topLeftCorner(n, n) = model.gamma;
  for (const auto& ch : model.jumps) {
    JumpChannel c{ch.rate, Eigen::VectorXcd::Zero(n + 1)};
    c.weights.head(n) = ch.weights;
    out.jumps.push_back(std::move(c));
  }
  out.ancilla = n;
  out.coupled_atom = spec.coupled_atom;
  return out;
}

using SparseMatrixC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Block-diagonal operator over the excitation sectors [k_lo, k_hi] of a basis.
class SectorOperator {
 public:
  SectorOperator(BasisPtr basis, int k_lo, std::vector<SparseMatrixC> blocks)
      : basis_(std::move(basis)), k_lo_(k_lo), blocks_(std::move(blocks)) {}

  const RestrictedBasis& basis() const noexcept { return *basis_; }
  const BasisPtr& basis_ptr() const noexcept { return basis_; }
  int k_lo() const noexcept { return k_lo_; }
  int k_hi() const noexcept { return k_lo_ + static_cast<int>(blocks_.size()) - 1; }
  bool has_sector(int k) const noexcept { return k >= k_lo() && k <= k_hi(); }

  const SparseMatrixC& block(int k) const {
    if (!has_sector(k)) throw DomainError("sector " + std::to_string(k) + " not materialized");
    return blocks_[static_cast<std::size_t>(k - k_lo_)];
  }

  /// out = H in on the contiguous index range of sectors [lo, hi]; vectors are range-local.
  void apply_range(int lo, int hi, const Eigen::Ref<const Eigen::VectorXcd>& in,
                   Eigen::Ref<Eigen::VectorXcd> out) const {
    const std::size_t base = basis_->sector_begin(lo);
    for (int k = lo; k <= hi; ++k) {
      const auto b = static_cast<Eigen::Index>(basis_->sector_begin(k) - base);
      const auto n = static_cast<Eigen::Index>(basis_->sector_size(k));
      out.segment(b, n).noalias() = block(k) * in.segment(b, n);
    }
  }

  /// Full-basis matvec; sectors not materialized map to zero.
  Eigen::VectorXcd apply(const Eigen::VectorXcd& in) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(in.size());
    const auto b = static_cast<Eigen::Index>(basis_->sector_begin(k_lo()));
    const auto n = static_cast<Eigen::Index>(basis_->sector_end(k_hi()) - basis_->sector_begin(k_lo()));
    apply_range(k_lo(), k_hi(), in.segment(b, n), out.segment(b, n));
    return out;
  }

  SparseMatrixC to_sparse() const {
    const auto d = static_cast<Eigen::Index>(basis_->dim());
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int k = k_lo(); k <= k_hi(); ++k) {
      const auto off = static_cast<Eigen::Index>(basis_->sector_begin(k));
      const auto& blk = block(k);
      for (Eigen::Index r = 0; r < blk.outerSize(); ++r)
        for (SparseMatrixC::InnerIterator it(blk, r); it; ++it)
          trip.emplace_back(off + it.row(), off + it.col(), it.value());
    }
    SparseMatrixC m(d, d);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }

  std::size_t nonzeros() const {
    std::size_t nnz = 0;
    for (const auto& b : blocks_) nnz += static_cast<std::size_t>(b.nonZeros());
    return nnz;
  }

 private:
  BasisPtr basis_;
  int k_lo_;
  std::vector<SparseMatrixC> blocks_;
};

/// Nonzeros of one sector block: one diagonal plus k(N-k) hops per row.
inline std::uint64_t sector_block_nonzeros(int n_atoms, int k) {
  return binomial(n_atoms, k) * (static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(n_atoms - k) + (k > 0));
}

/// Default operator budget: 2^27 stored nonzeros (~2 GiB).
inline constexpr std::uint64_t kDefaultMaxNonzeros = std::uint64_t{1} << 27;

/// Lifts the kernel to sectors [k_lo, k_hi] of the basis (defaults: all sectors).
inline SectorOperator sector_hamiltonian(const ModelMatrices& model, const BasisPtr& basis, int k_lo = 0,
                                         int k_hi = -1, std::uint64_t max_nonzeros = kDefaultMaxNonzeros) {
  const int n = basis->n_atoms();
  if (n != model.n_atoms()) throw DomainError("basis size does not match model size");
  if (k_hi < 0) k_hi = basis->n_max();
  if (k_lo < 0 || k_lo > k_hi || k_hi > basis->n_max()) throw DomainError("invalid sector range");
  std::uint64_t nnz = 0;
  for (int k = k_lo; k <= k_hi; ++k) nnz += sector_block_nonzeros(n, k);
  if (nnz > max_nonzeros)
    throw CapacityError("sector Hamiltonian needs " + std::to_string(nnz) + " nonzeros, budget " +
                        std::to_string(max_nonzeros));

  const auto& K = model.kernel;
  std::vector<SparseMatrixC> blocks;
  for (int k = k_lo; k <= k_hi; ++k) {
    const auto dimk = static_cast<Eigen::Index>(basis->sector_size(k));
    SparseMatrixC blk(dimk, dimk);
    const auto per_row = static_cast<Eigen::Index>(k * (n - k) + (k > 0));
    blk.reserve(Eigen::VectorXi::Constant(dimk, static_cast<int>(per_row)));
    std::vector<std::pair<Eigen::Index, cplx>> row;
    row.reserve(static_cast<std::size_t>(per_row));
    const std::size_t base = basis->sector_begin(k);
    const std::uint64_t all = (n == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
    basis->for_each_in_sector(k, [&](std::size_t idx, std::uint64_t q) {
      // Row q: H_qp = K_ij for p = q - i + j with i in q, j not in q; diagonal sum_{i in q} K_ii.
      row.clear();
      cplx diag{};
      for (std::uint64_t a = q; a; a &= a - 1) {
        const int i = std::countr_zero(a);
        diag += K(i, i);
        const std::uint64_t without_i = q & ~(std::uint64_t{1} << i);
        for (std::uint64_t b = all & ~q; b; b &= b - 1) {
          const int j = std::countr_zero(b);
          const std::uint64_t p = without_i | (std::uint64_t{1} << j);
          row.emplace_back(static_cast<Eigen::Index>(basis->rank_in_sector(p)), K(i, j));
        }
      }
      if (k > 0) row.emplace_back(static_cast<Eigen::Index>(idx - base), diag);
      std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      const auto r = static_cast<Eigen::Index>(idx - base);
      for (const auto& [c, v] : row) blk.insert(r, c) = v;
    });
    blk.makeCompressed();
    blocks.push_back(std::move(blk));
  }
  return SectorOperator(basis, k_lo, std::move(blocks));
}

/// Sparse matrix of sum_i w_i sigma_ge^i on the full basis (maps sector k to k-1).
inline SparseMatrixC lowering_matrix(const RestrictedBasis& basis, std::span<const cplx> weights) {
  std::vector<Eigen::Triplet<cplx>> trip;
  basis.for_each([&](std::size_t idx, std::uint64_t bits) {
    const int k = std::popcount(bits);
    if (k == 0) return;
    for (std::uint64_t b = bits; b; b &= b - 1) {
      const int site = std::countr_zero(b);
      const cplx w = weights[static_cast<std::size_t>(site)];
      if (w == cplx{}) continue;
      const std::uint64_t q = bits & ~(std::uint64_t{1} << site);
      trip.emplace_back(static_cast<Eigen::Index>(basis.sector_begin(k - 1) + basis.rank_in_sector(q)),
                        static_cast<Eigen::Index>(idx), w);
    }
  });
  const auto d = static_cast<Eigen::Index>(basis.dim());
  SparseMatrixC m(d, d);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

// JSON debugging schema: kernels as {"re": [[...]], "im": [[...]]}.

inline nlohmann::json to_json(const Geometry& g) {
  return {{"n_atoms", g.n_atoms()}, {"spacing", g.spacing}, {"k1d", g.k1d}, {"positions", g.positions}};
}

inline Geometry geometry_from_json(const nlohmann::json& j) {
  Geometry g;
  g.spacing = j.at("spacing").get<double>();
  g.k1d = j.value("k1d", 1.0);
  g.positions = j.at("positions").get<std::vector<double>>();
  return g;
}

namespace detail {
inline nlohmann::json real_matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}
}  // namespace detail

inline nlohmann::json to_json(const ModelMatrices& m) {
  nlohmann::json j;
  j["variant"] = to_string(m.variant);
  j["gamma_1d"] = m.gamma_1d;
  j["kernel"] = {{"re", detail::real_matrix_json(m.kernel.real())}, {"im", detail::real_matrix_json(m.kernel.imag())}};
  j["gamma"] = detail::real_matrix_json(m.gamma);
  nlohmann::json jumps = nlohmann::json::array();
  for (const auto& c : m.jumps) {
    std::vector<double> re, im;
    for (Eigen::Index i = 0; i < c.weights.size(); ++i) {
      re.push_back(c.weights[i].real());
      im.push_back(c.weights[i].imag());
    }
    jumps.push_back({{"rate", c.rate}, {"weights", {{"re", re}, {"im", im}}}});
  }
  j["jumps"] = jumps;
  if (m.ancilla) j["ancilla"] = {{"index", *m.ancilla}, {"coupled_atom", *m.coupled_atom}};
  return j;
}

}  // namespace wqed
