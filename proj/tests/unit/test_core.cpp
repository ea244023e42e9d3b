#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "oracle/brute_force.hpp"
#include "wqed/hilbert.hpp"
#include "wqed/model.hpp"
#include "wqed/observables.hpp"
#include "wqed/rng.hpp"
#include "wqed/scattering.hpp"

using namespace wqed;
using std::numbers::pi;

namespace {

std::vector<std::uint64_t> patterns_of(const RestrictedBasis& b) {
  std::vector<std::uint64_t> out;
  b.for_each([&](std::size_t, std::uint64_t bits) { out.push_back(bits); });
  return out;
}

Eigen::VectorXcd random_vector(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXcd v(n);
  for (auto& x : v) x = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return v;
}

Eigen::VectorXcd embed(const StateVector& psi) {
  const auto& b = psi.basis();
  return oracle::projector(b.n_atoms(), patterns_of(b)).transpose() * psi.amplitudes();
}

Geometry random_geometry(int n, std::uint64_t seed, std::uint64_t r = 0) {
  return sample_positions(n, kDefaultSpacing, DisorderSpec::full(seed, r));
}

}  // namespace

// ---- rng

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  Rng a = realization_stream(5, 3), b = realization_stream(5, 3), c = realization_stream(5, 4);
  const double x = a.uniform();
  EXPECT_EQ(x, b.uniform());
  EXPECT_NE(x, c.uniform());
  EXPECT_NE(trajectory_stream(5, 3, 0).seed(), trajectory_stream(5, 3, 1).seed());
  EXPECT_NE(trajectory_stream(5, 3, 0).seed(), realization_stream(5, 3).substream(0).seed());
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(1);
  double lo = 1, hi = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
}

// ---- hilbert

TEST(Basis, Dimensions) {
  EXPECT_EQ(RestrictedBasis(3, 1).dim(), 4u);
  EXPECT_EQ(RestrictedBasis(30, 5).dim(), 174437u);
  EXPECT_EQ(RestrictedBasis(24, 6).dim(), 190051u);
  // Independent binomial sum.
  for (int n = 1; n <= 20; ++n)
    for (int k = 0; k <= n; ++k) {
      std::uint64_t d = 0;
      for (int j = 0; j <= k; ++j) {
        double c = 1;
        for (int i = 0; i < j; ++i) c = c * (n - i) / (i + 1);
        d += static_cast<std::uint64_t>(std::llround(c));
      }
      EXPECT_EQ(RestrictedBasis::dimension(n, k), d);
    }
}

TEST(Basis, SmallPatternsInOrder) {
  RestrictedBasis b(3, 1);
  EXPECT_EQ(patterns_of(b), (std::vector<std::uint64_t>{0b000, 0b001, 0b010, 0b100}));
}

TEST(Basis, MatchesSortedEnumeration) {
  for (auto [n, k] : {std::pair{4, 2}, {7, 3}, {10, 10}, {12, 4}}) {
    RestrictedBasis b(n, k);
    std::vector<std::uint64_t> all;
    for (std::uint64_t x = 0; x < (1ULL << n); ++x)
      if (std::popcount(x) <= k) all.push_back(x);
    std::stable_sort(all.begin(), all.end(), [](auto x, auto y) {
      return std::popcount(x) != std::popcount(y) ? std::popcount(x) < std::popcount(y) : x < y;
    });
    ASSERT_EQ(patterns_of(b), all);
    for (std::size_t i = 0; i < all.size(); ++i) {
      EXPECT_EQ(b.rank(OccupationPattern(all[i])), i);
      EXPECT_EQ(b.unrank(i).bits(), all[i]);
    }
  }
}

TEST(Basis, EndpointsAndSectors) {
  RestrictedBasis b(14, 3);
  EXPECT_EQ(b.rank(OccupationPattern(0)), 0u);
  EXPECT_EQ(b.unrank(b.dim() - 1).bits(), 0b111ULL << 11);
  EXPECT_EQ(b.sector_begin(2), 15u);
  EXPECT_EQ(b.sector_size(3), 364u);
  EXPECT_THROW(b.rank(OccupationPattern(0b1111)), DomainError);
  EXPECT_THROW(b.unrank(b.dim()), DomainError);
  EXPECT_THROW(RestrictedBasis(35, 1), DomainError);
  EXPECT_THROW(RestrictedBasis(30, 10, 1000), CapacityError);
}

TEST(Basis, RoundTripLargeSector) {
  RestrictedBasis b(34, 3);
  Rng rng(3);
  for (int t = 0; t < 2000; ++t) {
    const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(b.dim()));
    EXPECT_EQ(b.rank(b.unrank(i)), i);
  }
}

TEST(States, Product) {
  auto b = build_basis(14, 2);
  const std::vector<int> none{};
  const auto vac = prepare_product(none, b);
  EXPECT_DOUBLE_EQ(vac.norm(), 1.0);
  EXPECT_EQ(vac.amplitudes()[0], cplx(1.0));
  const std::vector<int> s{0, 3};
  const auto psi = prepare_product(s, b);
  const auto idx = b->rank(OccupationPattern(0b1001));
  for (Eigen::Index i = 0; i < psi.amplitudes().size(); ++i)
    EXPECT_EQ(psi.amplitudes()[i], cplx(static_cast<std::size_t>(i) == idx ? 1.0 : 0.0));
  EXPECT_NEAR(half_chain_entropy(psi, 7), 0.0, 1e-14);
  const std::vector<int> bad{14};
  EXPECT_THROW(prepare_product(bad, b), DomainError);
  const std::vector<int> three{0, 1, 2};
  EXPECT_THROW(prepare_product(three, b), DomainError);
}

TEST(States, RandomPhaseSuperposition) {
  auto b = build_basis(16, 2);
  std::vector<int> left{0, 1, 2, 3, 4, 5, 6, 7};
  Rng rng(11);
  const auto psi = prepare_random_phase_superposition(left, 2, rng, b);
  int nz = 0;
  for (auto a : psi.amplitudes())
    if (std::abs(a) > 0) {
      ++nz;
      EXPECT_NEAR(std::abs(a), 1.0 / std::sqrt(28.0), 1e-15);
    }
  EXPECT_EQ(nz, 28);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-14);
  EXPECT_NEAR(total_population(site_populations(psi)), 2.0, 1e-13);
  for (int i = 8; i < 16; ++i) EXPECT_EQ(site_populations(psi)[i], 0.0);
  Rng r0(1);
  const auto vac = prepare_random_phase_superposition(left, 0, r0, b);
  EXPECT_NEAR(std::abs(vac.amplitudes()[0]), 1.0, 1e-15);
  EXPECT_THROW(prepare_random_phase_superposition(left, 9, r0, b), DomainError);
}

TEST(Operators, TransferTrivial) {
  auto b = build_basis(5, 2);
  const std::vector<int> e0{0}, e1{1};
  EXPECT_EQ(apply_transfer(0, 0, prepare_product(e0, b)).amplitudes(), prepare_product(e0, b).amplitudes());
  EXPECT_EQ(apply_transfer(1, 0, prepare_product(e0, b)).amplitudes(), prepare_product(e1, b).amplitudes());
}

TEST(Operators, TransferMatchesTensorOracle) {
  const int n = 4;
  auto b = build_basis(n, 2);
  const auto p = oracle::projector(n, patterns_of(*b));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::MatrixXcd full = oracle::lowering(n, i).adjoint() * oracle::lowering(n, j);
      const Eigen::MatrixXcd want = p * full * p.transpose();
      Eigen::MatrixXcd got(b->dim(), b->dim());
      for (std::size_t c = 0; c < b->dim(); ++c) {
        StateVector e(b);
        e.amplitudes()[static_cast<Eigen::Index>(c)] = 1.0;
        got.col(static_cast<Eigen::Index>(c)) = apply_transfer(i, j, e).amplitudes();
      }
      EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-15) << i << "," << j;
    }
}

TEST(Operators, Lowering) {
  auto b = build_basis(6, 2);
  const std::vector<int> none{}, e2{2};
  std::vector<cplx> w(6, 0.0);
  w[2] = 1.0;
  EXPECT_EQ(apply_lowering(w, prepare_product(none, b)).norm(), 0.0);
  EXPECT_EQ(apply_lowering(w, prepare_product(e2, b)).amplitudes(), prepare_product(none, b).amplitudes());

  // <u|L v> = <L^dagger u|v> against the dense oracle adjoint.
  Rng rng(4);
  for (auto& x : w) x = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  const StateVector u(b, random_vector(b->dim(), 1)), v(b, random_vector(b->dim(), 2));
  Eigen::MatrixXcd l_full = Eigen::MatrixXcd::Zero(64, 64);
  for (int i = 0; i < 6; ++i) l_full += w[i] * oracle::lowering(6, i);
  const auto p = oracle::projector(6, patterns_of(*b));
  const Eigen::MatrixXcd l = p * l_full * p.transpose();
  const cplx lhs = u.amplitudes().dot(apply_lowering(w, v).amplitudes());
  const cplx rhs = (l.adjoint() * u.amplitudes()).dot(v.amplitudes());
  EXPECT_LT(std::abs(lhs - rhs), 1e-12);
  EXPECT_LT((apply_lowering(w, v).amplitudes() - l * v.amplitudes()).norm(), 1e-13);
  EXPECT_LT((lowering_matrix(*b, w) * v.amplitudes() - l * v.amplitudes()).norm(), 1e-13);
}

// ---- model

TEST(Geometry, OrderedAndDisordered) {
  const auto g = sample_positions(10, kDefaultSpacing, DisorderSpec::ordered());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(g.positions[i], (i + 1) * kDefaultSpacing);
  const auto a = random_geometry(10, 7, 2), b = random_geometry(10, 7, 2), c = random_geometry(10, 7, 3);
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_NE(a.positions, c.positions);

  const auto big = sample_positions(100000, 1.0, DisorderSpec::full(9));
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double eps = big.positions[i] - (i + 1);
    ASSERT_GE(eps, -0.5);
    ASSERT_LE(eps, 0.5);
    sum += eps;
  }
  EXPECT_LT(std::abs(sum / 1e5), 3.0 * std::sqrt(1.0 / 12.0 / 1e5));
}

TEST(Model, SingleAtom) {
  Geometry g;
  g.positions = {0.0};
  const auto m = build_model(g, WaveguideVariant::FullOpen);
  EXPECT_EQ(m.kernel(0, 0), cplx(0.0, -0.5));
  EXPECT_EQ(m.gamma(0, 0), 1.0);
  ASSERT_EQ(m.jumps.size(), 1u);
  EXPECT_NEAR(m.jumps[0].rate, 1.0, 1e-14);
}

TEST(Model, StructureIdentities) {
  for (auto v : {WaveguideVariant::FullOpen, WaveguideVariant::HalfOpen}) {
    for (std::uint64_t r = 0; r < 20; ++r) {
      const auto m = build_model(random_geometry(12, 3, r), v);
      EXPECT_LT((m.kernel - m.kernel.transpose()).cwiseAbs().maxCoeff(), 1e-15);
      const Eigen::MatrixXcd rebuilt = hermitian_part(m.kernel) - cplx(0, 0.5) * m.gamma.cast<cplx>();
      EXPECT_LT((rebuilt - m.kernel).cwiseAbs().maxCoeff(), 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.gamma);
      const int rank = is_half(v) ? 1 : 2;
      EXPECT_LT(std::abs(es.eigenvalues()(12 - rank - 1)), 1e-10);
      ASSERT_EQ(m.jumps.size(), static_cast<std::size_t>(rank));
      Eigen::MatrixXcd recon = Eigen::MatrixXcd::Zero(12, 12);
      for (const auto& c : m.jumps) recon += c.rate * c.weights * c.weights.adjoint();
      EXPECT_LT((recon - m.gamma.cast<cplx>()).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Model, JumpRatesTraceIdentities) {
  const auto g = random_geometry(5, 21);
  const auto half = build_model(g, WaveguideVariant::HalfOpen);
  double s2 = 0;
  for (double z : g.positions) s2 += std::sin(z) * std::sin(z);
  ASSERT_EQ(half.jumps.size(), 1u);
  EXPECT_NEAR(half.jumps[0].rate, 2.0 * s2, 1e-12);
  const auto full = build_model(g, WaveguideVariant::FullOpen);
  ASSERT_EQ(full.jumps.size(), 2u);
  EXPECT_NEAR(full.jumps[0].rate + full.jumps[1].rate, 5.0, 1e-12);
}

TEST(Model, HermitianVariantsAreRealSymmetric) {
  const auto m = build_model(random_geometry(8, 2), WaveguideVariant::HalfHermitian);
  EXPECT_EQ(m.kernel.imag().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(m.jumps.empty());
  EXPECT_EQ(m.gamma.cwiseAbs().maxCoeff(), 0.0);
  const auto open = build_model(random_geometry(8, 2), WaveguideVariant::HalfOpen);
  EXPECT_LT((m.kernel - hermitian_part(open.kernel)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Model, HalfRequiresPositivePositions) {
  Geometry g;
  g.positions = {0.0, 1.0};
  EXPECT_THROW(build_model(g, WaveguideVariant::HalfOpen), DomainError);
  g.positions = {1.0, 1.0};
  EXPECT_THROW(build_model(g, WaveguideVariant::FullOpen), DomainError);
}

TEST(Model, Ancilla) {
  const auto m = attach_ancilla(build_model(random_geometry(6, 1), WaveguideVariant::HalfOpen), {});
  EXPECT_EQ(m.n_atoms(), 7);
  EXPECT_EQ(*m.ancilla, 6);
  EXPECT_EQ(*m.coupled_atom, 2);
  EXPECT_EQ(m.gamma.row(6).cwiseAbs().sum() + m.gamma.col(6).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(m.kernel(6, 2), cplx(0.5));
  const Eigen::MatrixXcd rebuilt = hermitian_part(m.kernel) - cplx(0, 0.5) * m.gamma.cast<cplx>();
  EXPECT_LT((rebuilt - m.kernel).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(attach_ancilla(m, {}), DomainError);
  AncillaSpec bad;
  bad.coupled_atom = 9;
  EXPECT_THROW(attach_ancilla(build_model(random_geometry(6, 1), WaveguideVariant::HalfOpen), bad), DomainError);
}

TEST(Model, SectorHamiltonianMatchesTensorOracle) {
  for (auto v : {WaveguideVariant::FullOpen, WaveguideVariant::HalfHermitian}) {
    const auto m = build_model(random_geometry(6, 8), v);
    auto b = build_basis(6, 3);
    const auto h = sector_hamiltonian(m, b);
    const auto p = oracle::projector(6, patterns_of(*b));
    const Eigen::MatrixXcd want = p * oracle::full_hamiltonian(m.kernel) * p.transpose();
    const Eigen::MatrixXcd got(h.to_sparse());
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(got.row(0).cwiseAbs().sum() + got.col(0).cwiseAbs().sum(), 0.0);
    const auto d1 = static_cast<Eigen::Index>(b->sector_begin(1));
    EXPECT_LT((got.block(d1, d1, 6, 6) - m.kernel).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Model, SectorRangeAndCapacity) {
  const auto m = build_model(random_geometry(8, 1), WaveguideVariant::FullOpen);
  auto b = build_basis(8, 3);
  const auto h = sector_hamiltonian(m, b, 2, 3);
  EXPECT_TRUE(h.has_sector(3));
  EXPECT_FALSE(h.has_sector(1));
  EXPECT_THROW(h.block(1), DomainError);
  EXPECT_EQ(h.nonzeros(), sector_block_nonzeros(8, 2) + sector_block_nonzeros(8, 3));
  EXPECT_THROW(sector_hamiltonian(m, b, 0, 3, 10), CapacityError);
}

TEST(Model, JsonRoundTrip) {
  const auto g = random_geometry(5, 2);
  const auto back = geometry_from_json(to_json(g));
  EXPECT_EQ(back.positions, g.positions);
}

// ---- scattering

TEST(Scattering, SingleAtom) {
  const auto p0 = single_atom_rt(0.0);
  EXPECT_EQ(p0.r, cplx(-1.0));
  EXPECT_EQ(p0.t, cplx(0.0));
  const auto p = single_atom_rt(0.7);
  EXPECT_NEAR(std::norm(p.r) + std::norm(p.t), 1.0, 1e-14);
  const auto far = single_atom_rt(1e9);
  EXPECT_LT(std::abs(far.r), 1e-8);
  EXPECT_NEAR(std::abs(far.t), 1.0, 1e-8);
  for (int i = 0; i < 100; ++i) {
    const double d = -5.0 + 0.1 * i;
    const auto q = single_atom_rt(d);
    EXPECT_NEAR(std::norm(q.r) + std::norm(q.t), 1.0, 1e-12);
    EXPECT_NEAR(std::norm(q.t), single_atom_transmittance(d), 1e-14);
  }
}

TEST(Scattering, ChainSmallCases) {
  Geometry one;
  one.positions = {0.3};
  EXPECT_NEAR(chain_transmittance(one, 0.8).transmittance(), single_atom_transmittance(0.8), 1e-14);
  Geometry two;
  two.positions = {0.0, 4.1};
  EXPECT_EQ(chain_transmittance(two, 0.0).transmittance(), 0.0);
}

TEST(Scattering, ThreeAtomsMatchLinearSolve) {
  for (std::uint64_t r = 0; r < 10; ++r) {
    const auto g = random_geometry(3, 17, r);
    for (double d : {-1.3, -0.2, 0.45, 1.0, 2.5}) {
      const double want = std::norm(oracle::chain_transmission(g.positions, d));
      EXPECT_NEAR(chain_transmittance(g, d).transmittance(), want, 1e-12) << "r=" << r << " d=" << d;
    }
  }
}

TEST(Scattering, LongChainStaysFinite) {
  const auto g = random_geometry(5000, 1);
  const auto c = chain_transmittance(g, 1.0);
  EXPECT_TRUE(std::isfinite(c.log_t));
  EXPECT_LT(c.log_t, -100.0);
}

TEST(Scattering, AndersonScaling) {
  const auto ord = anderson_statistics(20, kDefaultSpacing, DisorderSpec::ordered(), 1.0, 5, 1);
  EXPECT_NEAR(ord.var_log_t, 0.0, 1e-20);
  const auto a = anderson_statistics(25, kDefaultSpacing, DisorderSpec::full(0), 1.0, 2000, 3);
  const auto b = anderson_statistics(50, kDefaultSpacing, DisorderSpec::full(0), 1.0, 2000, 4);
  const double err = 2.0 * a.mean_stderr + b.mean_stderr;
  EXPECT_NEAR(b.mean_log_t, 2.0 * a.mean_log_t, 3.0 * err);
  EXPECT_THROW(anderson_statistics(5, 1.0, DisorderSpec::full(0), 1.0, 1, 1), DomainError);
}

TEST(Localization, Linear) {
  EXPECT_EQ(n_loc_linear(0.0).n_loc, 0.0);
  EXPECT_NEAR(n_loc_linear(0.5).n_loc, 1.0 / std::log(2.0), 1e-12);
  double prev = 0.0;
  for (int i = 1; i < 50; ++i) {
    const double v = n_loc_linear(0.1 * i).n_loc;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Localization, Saturated) {
  const auto inf = steady_state_bloch(1.0, std::numeric_limits<double>::infinity());
  EXPECT_EQ(inf.rho_ee, 0.5);
  EXPECT_EQ(inf.transmittance, 1.0);
  const auto big = steady_state_bloch(1.0, 1e6);
  EXPECT_NEAR(big.rho_ee, 0.5, 1e-9);
  EXPECT_NEAR(big.transmittance, 1.0, 1e-9);
  EXPECT_NEAR(steady_state_bloch(0.0, 1.0).rho_ee, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(steady_state_bloch(0.6, 0.0).transmittance, single_atom_transmittance(0.6), 1e-15);
  EXPECT_NEAR(n_loc_saturated(1.0, 0.0).n_loc, n_loc_linear(1.0).n_loc, 1e-12);
  EXPECT_NEAR(n_loc_saturated(1.0, 0.25).n_loc, 1.0 / std::log(25.0 / 24.0), 1e-9);
  EXPECT_NEAR(n_loc_saturated(1.0, 0.375).n_loc, 65.0, 1.0);
  EXPECT_TRUE(n_loc_saturated(1.0, 0.5).diverged());
  EXPECT_THROW(n_loc_saturated(1.0, -0.1), DomainError);
  EXPECT_THROW(steady_state_bloch(1.0, -1.0), DomainError);
}

// ---- observables against the tensor oracle

TEST(Observables, PopulationsAndEntropyMatchOracle) {
  for (auto [n, k] : {std::pair{6, 2}, {8, 3}, {8, 8}, {7, 2}}) {
    auto b = build_basis(n, k);
    StateVector psi(b, random_vector(b->dim(), 100 + n + k));
    psi.normalize();
    const auto full = embed(psi);
    const auto want = oracle::populations(full, n);
    const auto got = site_populations(psi);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    for (int cut = 1; cut < n; ++cut)
      EXPECT_NEAR(half_chain_entropy(psi, cut), oracle::entropy_left(full, n, cut), 1e-10) << n << "," << k;
  }
}

TEST(Observables, EntropySingleSectorAndBell) {
  auto b = build_basis(8, 3);
  StateVector psi(b);
  // Only sector 3 populated: block route.
  b->for_each_in_sector(3, [&](std::size_t idx, std::uint64_t) { psi.amplitudes()[static_cast<Eigen::Index>(idx)] = cplx(std::cos(1.0 * idx), std::sin(0.3 * idx)); });
  psi.normalize();
  EXPECT_NEAR(half_chain_entropy(psi, 4), oracle::entropy_left(embed(psi), 8, 4), 1e-10);

  auto b1 = build_basis(6, 1);
  StateVector bell(b1);
  bell.amplitudes()[static_cast<Eigen::Index>(b1->rank(OccupationPattern(1)))] = 1.0 / std::sqrt(2.0);
  bell.amplitudes()[static_cast<Eigen::Index>(b1->rank(OccupationPattern(1 << 5)))] = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(half_chain_entropy(bell, 3), std::log(2.0), 1e-14);
  EXPECT_THROW(half_chain_entropy(bell, 0), DomainError);
  StateVector un(b1);
  un.amplitudes()[1] = 2.0;
  EXPECT_THROW(half_chain_entropy(un, 3), DomainError);
}

TEST(Observables, ScalarObservables) {
  std::vector<double> p{1, 0, 0, 1, 0, 0};
  const std::vector<int> e{0, 3};
  EXPECT_NEAR(memory_parameter(p, e), 1.0, 1e-15);
  std::vector<double> u(6, 2.0 / 6.0);
  EXPECT_NEAR(memory_parameter(u, e), 0.0, 1e-15);
  std::vector<double> off{0, 1, 0, 0, 1, 0};
  EXPECT_NEAR(memory_parameter(off, e), -(2.0 / 6.0) / (1.0 - 2.0 / 6.0), 1e-15);
  EXPECT_THROW(memory_parameter(std::vector<double>{}, e), DomainError);

  EXPECT_EQ(left_half_size(16), 8);
  EXPECT_EQ(left_half_size(15), 8);
  std::vector<double> left{0.5, 0.5, 0, 0};
  EXPECT_NEAR(*half_imbalance(left), 1.0, 1e-15);
  std::vector<double> sym{0.1, 0.4, 0.4, 0.1};
  EXPECT_NEAR(*half_imbalance(sym), 0.0, 1e-15);
  EXPECT_FALSE(half_imbalance(std::vector<double>(4, 0.0)).has_value());

  Rng rng(2);
  std::vector<double> r(16);
  for (auto& x : r) x = rng.uniform();
  double sl = 0, sr = 0;
  for (int i = 0; i < 8; ++i) sl += r[i];
  for (int i = 8; i < 16; ++i) sr += r[i];
  EXPECT_NEAR(*half_imbalance(r), (sl - sr) / (sl + sr), 1e-14);
  EXPECT_NEAR(total_population(r), sl + sr, 1e-14);

  auto b = build_basis(5, 1);
  const std::vector<int> e3{3};
  const auto pop = site_populations(prepare_product(e3, b));
  EXPECT_EQ(pop, (std::vector<double>{0, 0, 0, 1, 0}));
  StateVector w(b);
  for (int i = 0; i < 5; ++i) w.amplitudes()[1 + i] = 1.0 / std::sqrt(5.0);
  for (double x : site_populations(w)) EXPECT_NEAR(x, 0.2, 1e-15);
  EXPECT_NEAR(ancilla_population(w, 4), 0.2, 1e-15);
}
