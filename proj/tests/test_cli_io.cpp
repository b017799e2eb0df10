#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scbf/checkpoint.hpp"
#include "scbf/config.hpp"
#include "scbf/errors.hpp"
#include "scbf/experiment.hpp"
#include "scbf/records.hpp"

using namespace scbf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("scbf_cli_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalDocumentGetsDefaults) {
  auto s = parse_config("{}");
  EXPECT_EQ(s.command, Command::kSimulate);
  EXPECT_EQ(s.params.alpha, 0.0);
  EXPECT_TRUE(s.noise.amplitudes.empty());
  EXPECT_EQ(s.noise.kind, NoiseKind::kAdditive);
  EXPECT_EQ(s.regime, Regime::kAdditiveSupercritical);
  // every noise dof gets the same amplitude
  Workspace ws(s);
  const auto& amp = ws.noise->amplitudes();
  for (double a : amp) EXPECT_EQ(a, s.noise.amplitude);
}

TEST(Config, CriticalCaseNeedsLargeBetaMu) {
  auto msg = config_error(R"({"n": 3, "r": 3, "mu": 1, "beta": 0.5})");
  EXPECT_NE(msg.find("critical case requires beta mu > 1 for coupling"), std::string::npos) << msg;
  EXPECT_NO_THROW(parse_config(R"({"n": 3, "r": 3, "mu": 1, "beta": 1.5})"));
}

TEST(Config, UnknownKeysRejectedWithPath) {
  EXPECT_NE(config_error(R"({"foo": 1})").find("foo"), std::string::npos);
  EXPECT_NE(config_error(R"({"noise": {"kind": "additive", "foo": 1}})").find("noise.foo"), std::string::npos);
  EXPECT_NE(config_error(R"({"mu": "one"})").find("mu"), std::string::npos);
  EXPECT_NE(config_error("{not json").find("malformed"), std::string::npos);
}

TEST(Config, RegimeTagMustFitParameters) {
  EXPECT_FALSE(config_error(R"({"r": 5, "regime": "critical"})").empty());
  EXPECT_FALSE(config_error(R"({"regime": "no-such-regime"})").empty());
  EXPECT_FALSE(config_error(R"({"regime": "multiplicative"})").empty());
  auto s = parse_config(R"({"noise": {"kind": "multiplicative", "q0": 1, "q1": 0.5}})");
  EXPECT_EQ(s.regime, Regime::kMultiplicative);
  // r = 2 in two dimensions is the subcritical case; it needs lambda_1 mu^3 >= 8 Tr
  EXPECT_EQ(parse_config(R"({"r": 2})").regime, Regime::kAdditive2dSubcritical);
  EXPECT_FALSE(config_error(R"({"r": 2, "mu": 0.2})").empty());
}

TEST(Config, TimesMustSitOnTheGrid) {
  EXPECT_FALSE(config_error(R"({"T": 0.0105})").empty());
  EXPECT_FALSE(config_error(R"({"command": "couple", "times": [0.5, 0.25]})").empty());
  EXPECT_FALSE(config_error(R"({"command": "couple", "times": [0.5, 1]})").empty());
}

TEST(Config, CanonicalFormRoundTrips) {
  auto s = parse_config(R"({"command": "harnack", "N": 8, "eigen_cut": 2.5, "mu": 1.5, "beta": 2, "r": 3,
    "noise": {"amplitude": [0.01, 0.02, 0.03, 0.04, 0.01, 0.02, 0.03, 0.04]}, "dt": 0.002, "T": 0.4, "seed": 99,
    "x": {"kind": "random", "norm": 0.3, "id": 4}, "y": {"kind": "offset", "distance": 0.05, "low_only": true},
    "observables": [1], "formats": ["json"]})");
  EXPECT_EQ(s.regime, Regime::kCritical);
  std::string text = s.to_json().dump();
  auto again = parse_config(text);
  EXPECT_TRUE(again == s);
  EXPECT_EQ(again.to_json().dump(), text);
}

TEST(Config, OffsetStateSitsAtTheRequestedDistance) {
  auto s = parse_config(R"({"x": {"kind": "random", "norm": 0.2}, "y": {"kind": "offset", "distance": 0.02}})");
  Workspace ws(s);
  EXPECT_NEAR(norm_h(ws.x), 0.2, 1e-14);
  EXPECT_NEAR(norm_h(ws.y - ws.x), 0.02, 1e-15);
  // the Monte Carlo seed does not move the initial data
  s.seed = 12345;
  Workspace ws2(s);
  EXPECT_EQ(norm_h(ws2.y - ws.y), 0.0);
}

TEST(Records, EmptySetWritesHeadersAndEmptyArray) {
  auto dir = scratch("empty");
  emit_records({}, dir, {"csv", "json"});
  EXPECT_EQ(slurp(dir / "records.csv"), "series,t,value,stderr\n");
  auto arr = nlohmann::json::parse(slurp(dir / "records.json"));
  EXPECT_TRUE(arr.is_array());
  EXPECT_TRUE(arr.empty());
}

TEST(Records, JsonRoundTripIsExact) {
  MetricsRecord r;
  r.experiment = "demo";
  r.command = "couple";
  r.constant("zeta", 1.0 / 3.0);
  r.constant("alpha", 1e-300);
  r.add("mean_w2", 0.1, 0.1 + 0.2, 1.0 / 7.0);
  r.add("mean_w2", 0.2, -2.5e17, 0.0);
  r.add("odd", 0.3, std::nan(""), INFINITY);
  r.verdict("check", true, 0.125, "a \"quoted\" detail");
  r.verdict("other", false, -std::sqrt(2.0));
  auto dir = scratch("roundtrip");
  emit_records({r}, dir, {"csv", "json"});
  auto back = read_records_json(dir / "records.json");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_TRUE(back[0] == r);
  // constants keep insertion order, not alphabetical
  EXPECT_EQ(back[0].constants.front().first, "zeta");
  auto csv = slurp(dir / "demo.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "series,t,value,stderr");
  EXPECT_NE(csv.find("mean_w2,0.10000000000000001,0.30000000000000004,0.14285714285714285"), std::string::npos);
}

TEST(Records, SeventeenDigitsReadBack) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -0.0, 123456789.0})
    EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v) << format_number(v);
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
}

TEST(Checkpoint, FieldRoundTripIsBitIdentical) {
  auto b = SpectralBasis::build(2, 16, 4.5);
  auto u = random_field(b, 3, 1, 0.7);
  auto dir = scratch("field");
  save_field(dir / "u.json", u);
  auto v = load_field(dir / "u.json", b);
  auto cu = u.coefficients(), cv = v.coefficients();
  ASSERT_EQ(cu.size(), cv.size());
  for (std::size_t i = 0; i < cu.size(); ++i) {
    EXPECT_EQ(cu[i].real(), cv[i].real());
    EXPECT_EQ(cu[i].imag(), cv[i].imag());
  }
}

TEST(Checkpoint, MismatchedResolutionRejected) {
  auto b16 = SpectralBasis::build(2, 16, 4.5), b8 = SpectralBasis::build(2, 8, 4.5);
  auto dir = scratch("mismatch");
  save_field(dir / "u.json", random_field(b16, 3, 1));
  EXPECT_THROW(load_field(dir / "u.json", b8), MismatchError);
}

TEST(Checkpoint, VersionMismatchRejected) {
  auto b = SpectralBasis::build(2, 8, 4.5);
  auto dir = scratch("version");
  save_field(dir / "u.json", random_field(b, 3, 1));
  auto j = nlohmann::json::parse(slurp(dir / "u.json"));
  j["version"] = kCheckpointVersion + 1;
  std::ofstream(dir / "u.json") << j.dump();
  EXPECT_THROW(load_field(dir / "u.json", b), MismatchError);
}

TEST(Checkpoint, CoupledStateRoundTrip) {
  auto b = SpectralBasis::build(2, 8, 2.5);
  CoupledCheckpoint c{CouplingState{random_field(b, 1, 0), random_field(b, 1, 1), -0.37, 0.021, 0.5, 500},
                      CouplingMode::kWeighted, 42, 7};
  auto dir = scratch("coupled");
  save_checkpoint(dir / "c.json", c);
  auto d = load_coupled_checkpoint(dir / "c.json", b);
  EXPECT_EQ(norm_h(d.state.u - c.state.u), 0.0);
  EXPECT_EQ(norm_h(d.state.v - c.state.v), 0.0);
  EXPECT_EQ(d.state.log_phi, c.state.log_phi);
  EXPECT_EQ(d.state.int_h_sq, c.state.int_h_sq);
  EXPECT_EQ(d.state.step, 500u);
  EXPECT_EQ(d.mode, CouplingMode::kWeighted);
  EXPECT_EQ(d.seed, 42u);
  EXPECT_EQ(d.trajectory, 7u);
  EXPECT_THROW(load_path_checkpoint(dir / "c.json", b), MismatchError);
}

TEST(Experiment, ResumeMatchesUninterruptedRun) {
  auto base = scratch("resume");
  const std::string common = R"("paths": 1, "dt": 0.002, "checkpoint": true, "x": {"kind": "random", "norm": 0.5}, )";
  auto first = parse_config("{" + common + R"("T": 0.2, "out": ")" + (base / "a").string() + "\"}");
  auto second = parse_config("{" + common + R"("T": 0.4, "out": ")" + (base / "b").string() + R"(", "resume": ")" +
                             (base / "a" / "checkpoint.json").string() + "\"}");
  auto whole = parse_config("{" + common + R"("T": 0.4, "out": ")" + (base / "c").string() + "\"}");
  ASSERT_EQ(run_and_emit(first, std::cerr), 0);
  ASSERT_EQ(run_and_emit(second, std::cerr), 0);
  ASSERT_EQ(run_and_emit(whole, std::cerr), 0);
  auto b = slurp(base / "b" / "checkpoint.json"), c = slurp(base / "c" / "checkpoint.json");
  EXPECT_FALSE(b.empty());
  EXPECT_EQ(b, c);
}

TEST(Experiment, ResumeWithOtherSeedIsAConfigError) {
  auto base = scratch("resume_seed");
  auto first = parse_config(R"({"paths": 1, "T": 0.01, "checkpoint": true, "out": ")" + base.string() + "\"}");
  ASSERT_EQ(run_and_emit(first, std::cerr), 0);
  auto other = parse_config(R"({"paths": 1, "T": 0.02, "seed": 2, "out": ")" + base.string() + R"(", "resume": ")" +
                            (base / "checkpoint.json").string() + "\"}");
  EXPECT_EQ(run_and_emit(other, std::cerr), kExitConfig);
}

TEST(Experiment, SameSpecTwiceIsByteIdentical) {
  auto base = scratch("determinism");
  for (const char* sub : {"one", "two"}) {
    auto s = parse_config(R"({"paths": 4, "T": 0.1, "sample_every": 25, "x": {"kind": "random", "norm": 0.3}, "out": ")" +
                          (base / sub).string() + "\"}");
    ASSERT_LE(run_and_emit(s, std::cerr), kExitVerdict);
  }
  EXPECT_EQ(slurp(base / "one" / "records.json"), slurp(base / "two" / "records.json"));
  EXPECT_EQ(slurp(base / "one" / "simulate.csv"), slurp(base / "two" / "simulate.csv"));
  EXPECT_FALSE(slurp(base / "one" / "simulate.csv").empty());
}

TEST(Experiment, ZeroHorizonGivesInitialDiagnosticsOnly) {
  auto s = parse_config(R"({"T": 0, "paths": 3, "x": {"kind": "mode", "amplitude": 0.2}})");
  auto recs = run_experiment(s);
  ASSERT_EQ(recs.size(), 1u);
  for (const auto& p : recs[0].series) EXPECT_EQ(p.t, 0.0);
  EXPECT_TRUE(recs[0].verdicts.empty());
  // a single real mode pair of amplitude a has ||x||_H = a
  EXPECT_NEAR(recs[0].series.front().value, 0.2 * 0.2, 1e-15);
}

TEST(Experiment, ContractionRecordLayout) {
  auto dir = scratch("couple");
  auto s = parse_config(R"({"command": "couple", "paths": 4, "T": 0.2, "x": {"kind": "random", "norm": 0.1},
    "out": ")" + dir.string() + "\"}");
  auto recs = run_experiment(s);
  emit_records(recs, dir, s.formats);
  ASSERT_GE(recs.size(), 2u);
  EXPECT_EQ(recs[0].experiment, "contraction");
  auto csv = slurp(dir / "contraction.csv");
  EXPECT_NE(csv.find("\nmean_w2,"), std::string::npos);
  auto j = nlohmann::json::parse(slurp(dir / "records.json"));
  for (const char* k : {"theta", "gamma", "k", "eta_hat", "L", "K_tilde", "Tr", "lambda_cut"})
    EXPECT_TRUE(j[0]["constants"].contains(k)) << k;
  EXPECT_DOUBLE_EQ(j[0]["constants"]["theory_rate"].get<double>(), 3.75);
}

TEST(Experiment, ProptestReportsCounts) {
  auto dir = scratch("proptest");
  auto s = parse_config(R"({"command": "proptest", "N": 8, "eigen_cut": 2.5, "trials": 20, "out": ")" + dir.string() + "\"}");
  auto recs = run_experiment(s);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_FALSE(recs[0].verdicts.empty());
  EXPECT_TRUE(recs[0].pass());
}
