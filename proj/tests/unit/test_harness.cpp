#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "wqed/harness/config.hpp"
#include "wqed/harness/output.hpp"
#include "wqed/harness/presets.hpp"
#include "wqed/harness/run.hpp"
#include "wqed/parallel.hpp"

using namespace wqed;
using namespace wqed::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("wqed_test_" + name);
  fs::remove_all(p);
  return p;
}

/// CSV text without '#' comment lines.
std::string body(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line, out;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') out += line + "\n";
  return out;
}

std::vector<std::vector<std::string>> rows(const fs::path& p) {
  std::istringstream in(body(p));
  std::string line;
  std::vector<std::vector<std::string>> out;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    out.push_back(cells);
  }
  return out;
}

ExperimentConfig small_closed(const fs::path& out) {
  ExperimentConfig c;
  c.kind = ExperimentKind::TransportClosed;
  c.n_atoms = {8};
  c.n_exc = {2};
  c.t_max = 5;
  c.n_samples = 11;
  c.realizations = 3;
  c.observables = {"memory", "site_populations"};
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST(Config, RoundTripsLosslessly) {
  for (const auto& p : preset_library()) {
    const auto text = dump_config(p.config);
    const auto back = load_config(text);
    EXPECT_EQ(dump_config(back), text) << p.name;
    EXPECT_EQ(config_hash(back), config_hash(p.config));
  }
  ExperimentConfig c;
  c.spacing = 0.1 + 0.2;
  c.detunings = {1.0 / 3.0, 2.0 / 7.0};
  const auto back = load_config(dump_config(c));
  EXPECT_EQ(back.spacing, c.spacing);
  EXPECT_EQ(back.detunings, c.detunings);
}

TEST(Config, HashIgnoresOutputAndThreads) {
  ExperimentConfig a;
  auto b = a;
  b.output_dir = "elsewhere";
  b.threads = 8;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, ReportsEveryIssueWithPath) {
  const std::string text = R"({
    "version": 1, "experiment": "transport-closed",
    "geometry": {"n_atoms": [0, 10], "spacing": -1, "colour": 3},
    "solver": {"t_max": "long"},
    "ensemble": {"realizations": 0},
    "observables": ["memory", "nonsense"],
    "bogus": true
  })";
  try {
    load_config(text);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    std::set<std::string> paths;
    for (const auto& i : e.issues()) paths.insert(i.substr(0, i.find(':')));
    for (const char* want : {"/bogus", "/geometry/colour", "/geometry/n_atoms/0", "/geometry/spacing", "/solver/t_max",
                             "/ensemble/realizations", "/observables/1"})
      EXPECT_TRUE(paths.count(want)) << want;
  }
  EXPECT_THROW(load_config("{not json"), ConfigError);
  EXPECT_THROW(load_config(R"({"experiment": "entropy"})"), ConfigError);
  EXPECT_THROW(load_config(R"({"version": 2, "experiment": "entropy"})"), ConfigError);
}

TEST(Config, SemanticChecks) {
  ExperimentConfig c;
  c.kind = ExperimentKind::TransportOpen;
  c.variant = WaveguideVariant::FullHermitian;
  EXPECT_THROW(load_config(dump_config(c)), ConfigError);
  c = ExperimentConfig{};
  c.kind = ExperimentKind::Revivals;
  c.variant = WaveguideVariant::HalfHermitian;
  EXPECT_THROW(load_config(dump_config(c)), ConfigError);  // needs an ancilla initial state
  c.initial.kind = InitialStateSpec::Kind::AncillaRandomPhase;
  c.n_atoms = {14};
  c.n_exc = {2};
  EXPECT_NO_THROW(load_config(dump_config(c)));
}

TEST(Config, DefaultsValidateForEveryKind) {
  for (const auto& [kind, name] : experiment_names()) {
    const auto c = default_config(kind);
    EXPECT_EQ(c.kind, kind);
    EXPECT_NO_THROW(load_config(dump_config(c))) << name;
  }
}

TEST(Presets, LibraryIsCompleteAndValid) {
  const auto lib = preset_library();
  EXPECT_GE(lib.size(), 10u);
  std::set<std::string> names;
  for (const auto& p : lib) {
    EXPECT_TRUE(names.insert(p.name).second) << "duplicate " << p.name;
    EXPECT_NO_THROW(load_config(dump_config(p.config))) << p.name;
  }
  const auto* d = find_preset(lib, "fig2d-delocalized-fraction");
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->config.n_atoms, (std::vector<int>{25, 50, 100, 200}));
  EXPECT_GE(d->config.realizations, 100u);
  const auto* f4 = find_preset(lib, "fig4-disordered");
  ASSERT_NE(f4, nullptr);
  EXPECT_EQ(f4->config.n_atoms, (std::vector<int>{30}));
  EXPECT_EQ(f4->config.n_exc, (std::vector<int>{1, 3, 5}));
  EXPECT_EQ(f4->config.t_max, 100.0);
  const auto* si = find_preset(lib, "figSI-saturation");
  ASSERT_NE(si, nullptr);
  EXPECT_EQ(si->config.detunings, (std::vector<double>{1.0}));
  EXPECT_FALSE(si->config.omegas.empty());
  EXPECT_FALSE(si->config.rho_ee.empty());
  EXPECT_EQ(find_preset(lib, "nope"), nullptr);
  for (const auto* n : {"fig2-anderson", "fig3-overlap", "fig5-entropy", "fig6-open", "fig7-revivals"})
    EXPECT_NE(find_preset(lib, n), nullptr) << n;
}

TEST(Output, NumbersRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 123456.789})
    EXPECT_EQ(std::strtod(format_number(x).c_str(), nullptr), x);
  EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(Run, SingleAtomDecayCsv) {
  const auto out = scratch("decay");
  auto c = find_preset(preset_library(), "single-atom-decay")->config;
  c.output_dir = out.string();
  const auto m = run(c);
  ASSERT_EQ(m.files.size(), 1u);
  const auto csv = out / m.files[0];
  const auto text = read_file(csv);
  EXPECT_NE(text.find("# config_hash=" + m.config_hash), std::string::npos);
  EXPECT_NE(text.find("# seed=1"), std::string::npos);
  int checked = 0;
  for (const auto& r : rows(csv)) {
    if (r[1] != "p_0") continue;
    EXPECT_NEAR(std::stod(r[2]), std::exp(-std::stod(r[0])), 1e-7);
    ++checked;
  }
  EXPECT_EQ(checked, 101);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_TRUE(fs::exists(out / "config.json"));
  EXPECT_EQ(config_hash(load_config(read_file(out / "config.json"))), m.config_hash);
}

TEST(Run, DeterministicAcrossThreadsAndResume) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto ca = small_closed(a), cb = small_closed(b);
  cb.threads = 3;
  RunOptions fresh;
  fresh.resume = false;
  const auto ma = run(ca, fresh);
  const auto mb = run(cb, fresh);
  ASSERT_EQ(ma.files, mb.files);
  for (const auto& f : ma.files) EXPECT_EQ(body(a / f), body(b / f)) << f;

  // Drop one checkpoint and rerun with resume: the missing realization is recomputed.
  fs::remove(a / "partial" / "N8_n2" / "r1.json");
  const auto before = read_file(a / ma.files[0]);
  const auto mr = run(ca);
  EXPECT_EQ(mr.resumed_realizations, 2u);
  EXPECT_EQ(read_file(a / ma.files[0]), before);
}

TEST(Run, OpenJumpsAndMasterAgree) {
  const auto a = scratch("open_master"), b = scratch("open_jumps");
  ExperimentConfig c;
  c.kind = ExperimentKind::TransportOpen;
  c.variant = WaveguideVariant::HalfOpen;
  c.n_atoms = {6};
  c.n_exc = {2};
  c.t_max = 4;
  c.n_samples = 5;
  c.realizations = 1;
  c.trajectories = 600;
  c.observables = {"total_population"};
  c.open_method = "master";
  c.output_dir = a.string();
  const auto ma = run(c);
  c.open_method = "jumps";
  c.output_dir = b.string();
  const auto mb = run(c);
  const auto ra = rows(a / ma.files[0]), rb = rows(b / mb.files[0]);
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 1; i < ra.size(); ++i) {
    const double exact = std::stod(ra[i][2]), mc = std::stod(rb[i][2]), se = std::stod(rb[i][7]);
    EXPECT_NEAR(mc, exact, 4.0 * se + 1e-9) << i;
  }
  EXPECT_EQ(rb[1][5], "600");
}

TEST(Run, CapacityErrorBeforeCompute) {
  const auto out = scratch("capacity");
  ExperimentConfig c;
  c.kind = ExperimentKind::TransportClosed;
  c.n_atoms = {34};
  c.n_exc = {17};
  c.output_dir = out.string();
  EXPECT_THROW(run(c), CapacityError);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Run, OtherExperimentKinds) {
  const auto out = scratch("kinds");
  ExperimentConfig a;
  a.kind = ExperimentKind::AndersonStats;
  a.n_atoms = {10};
  a.detunings = {0.5, 1.0};
  a.realizations = 20;
  a.output_dir = (out / "a").string();
  EXPECT_EQ(run(a).files.size(), 1u);

  ExperimentConfig s;
  s.kind = ExperimentKind::SaturationCurve;
  s.omegas = {0.0, 1.0};
  s.rho_ee = {0.0, 0.375};
  s.output_dir = (out / "s").string();
  const auto ms = run(s);
  EXPECT_EQ(ms.files.size(), 2u);

  ExperimentConfig e;
  e.kind = ExperimentKind::Eigenmodes;
  e.variant = WaveguideVariant::FullOpen;
  e.n_atoms = {10, 20};
  e.realizations = 4;
  e.overlap = true;
  e.output_dir = (out / "e").string();
  const auto me = run(e);
  EXPECT_TRUE(me.summary.contains("delocalized_fraction_exponent"));

  ExperimentConfig r;
  r.kind = ExperimentKind::Revivals;
  r.variant = WaveguideVariant::HalfHermitian;
  r.initial.kind = InitialStateSpec::Kind::AncillaProduct;
  r.initial.sites = {0};
  r.n_atoms = {6};
  r.n_exc = {2};
  r.t_max = 20;
  r.realizations = 2;
  r.observables = {};
  r.output_dir = (out / "r").string();
  const auto mr = run(r);
  ASSERT_EQ(mr.files.size(), 1u);
  EXPECT_FALSE(rows(out / "r" / mr.files[0]).empty());

  ExperimentConfig en;
  en.kind = ExperimentKind::Entropy;
  en.initial.kind = InitialStateSpec::Kind::LeftHalfRandomPhase;
  en.n_atoms = {8};
  en.n_exc = {2};
  en.t_max = 5;
  en.n_samples = 6;
  en.realizations = 2;
  en.observables = {};
  en.output_dir = (out / "en").string();
  const auto men = run(en);
  const auto rs = rows(out / "en" / men.files[0]);
  ASSERT_FALSE(rs.empty());
  EXPECT_EQ(rs.front()[1], "entropy");
  EXPECT_NEAR(std::stod(rs.front()[2]), 0.0, 1e-12);  // supported on the left half only
  EXPECT_GT(std::stod(rs.back()[2]), 0.05);
}

TEST(Parallel, RunsEveryIndexAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw NumericalError("x"); }), NumericalError);
}
