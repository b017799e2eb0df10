// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Property suites run at N = 32; the long Monte Carlo checks at N = 16 (see README).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "scbf/coupling.hpp"
#include "scbf/experiment.hpp"
#include "scbf/properties.hpp"
#include "scbf/verify.hpp"

using namespace scbf;

namespace {

// Pinned tolerances and sizes.
constexpr std::size_t kPropertyTrials = 10000;
constexpr int kPropertyN = 32;
constexpr int kMonteCarloN = 16;
constexpr double kEigenCut = 4.5;  // forced block |k|^2 <= 4, lambda_cut = 4
constexpr double kTrace = 0.01;
constexpr double kDt = 1e-3;
constexpr double kZ = 3.0;  // standard errors allowed in every statistical check
constexpr double kRateFraction = 0.9;
constexpr double kMinRefinementRatio = 2.0;  // pathwise residual must halve under dt -> dt/2

constexpr std::size_t kEnergyPaths = 200;
constexpr std::size_t kMomentPaths = 1000;
constexpr double kMomentHorizon = 5.0;
constexpr std::size_t kContractionPaths = 500;
constexpr std::size_t kGirsanovPaths = 1000;
constexpr std::size_t kHarnackPaths = 1000;
constexpr std::size_t kGradientPaths = 500;
constexpr std::size_t kErgodicPaths = 32;
constexpr double kErgodicHorizon = 50.0;
constexpr double kErgodicBurnIn = 5.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Uniform additive noise on the forced block with total trace kTrace.
NoiseModel additive_noise(const BasisPtr& b) {
  return NoiseModel::additive(b, std::sqrt(kTrace / double(NoiseModel::dof_count(*b))));
}

EnsembleConfig ensemble(const BasisPtr& b, const NoiseModel* noise, PhysParams p, Regime regime, std::size_t paths,
                        std::uint64_t seed) {
  EnsembleConfig c;
  c.basis = b;
  c.params = p;
  c.noise = noise;
  c.step.dt = kDt;
  c.regime = regime;
  c.seed = seed;
  c.paths = paths;
  c.workers = worker_count();
  return c;
}

struct RegimeCase {
  std::string name;
  PhysParams params;
  Regime regime;
};

// Three additive regimes at the criterion-5 noise level.
std::vector<RegimeCase> additive_regimes() {
  return {
      {"supercritical r=5", {1.0, 1.0, 5.0, 0.0}, Regime::kAdditiveSupercritical},
      {"2d subcritical r=2", {1.0, 1.0, 2.0, 0.0}, Regime::kAdditive2dSubcritical},
      {"2d critical r=3, beta mu=2", {1.0, 2.0, 3.0, 0.0}, Regime::kCritical},
  };
}

// x small, y = x + dist * unit field.
std::pair<VelocityField, VelocityField> start_pair(const BasisPtr& b, double x_norm, double dist) {
  auto x = random_field(b, 0x1d, 0, 1.0, 2.0, Stream::kInitial);
  x *= x_norm / norm_h(x);
  auto e = random_field(b, 0x1d, 1, 1.0, 2.0, Stream::kInitial);
  e *= dist / norm_h(e);
  return {x, x + e};
}

std::string suite_summary(const std::vector<SuiteResult>& suites, bool& pass) {
  std::string s;
  std::size_t total = 0;
  for (const auto& r : suites) {
    total += r.trials;
    if (!r.pass()) {
      pass = false;
      s += fmt(" [%s: %zu/%zu violations, worst %.3g]", r.name.c_str(), r.violations, r.trials, r.worst);
    }
  }
  return fmt("%zu checks in %zu suites", total, suites.size()) + s;
}

// --- 1, 2 -----------------------------------------------------------------

Outcome operator_identities() {
  auto b = SpectralBasis::build(2, kPropertyN, kEigenCut);
  Transformer tr(b);
  Outcome o{true, ""};
  o.detail = suite_summary(operator_identity_suite(tr, kPropertyTrials, 101), o.pass);
  return o;
}

Outcome monotonicity() {
  auto b = SpectralBasis::build(2, kPropertyN, kEigenCut);
  Transformer tr(b);
  Outcome o{true, ""};
  o.detail = suite_summary(monotonicity_suite(tr, kPropertyTrials, 202), o.pass);
  // n = 3 exercises the critical case in its native dimension
  auto b3 = SpectralBasis::build(3, 8, 2.5);
  Transformer tr3(b3);
  auto suites3 = monotonicity_suite(tr3, kPropertyTrials / 10, 203);
  bool pass3 = true;
  o.detail += "; n=3: " + suite_summary(suites3, pass3);
  o.pass = o.pass && pass3;
  return o;
}

// --- 3 --------------------------------------------------------------------

Outcome energy_identity() {
  auto b = SpectralBasis::build(2, kPropertyN, kEigenCut);
  auto noise = additive_noise(b);
  PhysParams p{1.0, 1.0, 5.0, 0.0};
  auto [x, unused] = start_pair(b, 0.5, 0.0);
  (void)unused;
  auto cfg = ensemble(b, &noise, p, Regime::kAdditiveSupercritical, kEnergyPaths, 3);
  auto integs = cfg.make_integrators();
  const auto steps = step_count(1.0, kDt);
  // Expectation form: the martingale is left in, its mean is what vanishes.
  auto res = parallel_map<double>(kEnergyPaths, integs.size(), [&](std::size_t i, std::size_t w) {
    Path path(*integs[w], x, cfg.seed, i);
    path.run(steps);
    return path.energy_residual() + path.ledger().martingale;
  });
  auto e = estimate(res);
  bool mean_ok = std::abs(e.mean) <= kZ * e.stderr;

  // Refinement on noise-free paths: with noise the pathwise residual only shrinks like sqrt(dt).
  auto residual_at = [&](double dt) {
    Integrator integ(p, nullptr, {dt}, b);
    Path path(integ, x, 1, 0);
    path.run(step_count(1.0, dt));
    return std::abs(path.energy_residual());
  };
  const double r1 = residual_at(kDt), r2 = residual_at(kDt / 2), r4 = residual_at(kDt / 4);
  bool refine_ok = r1 / r2 >= kMinRefinementRatio && r2 / r4 >= kMinRefinementRatio;
  return {mean_ok && refine_ok,
          fmt("mean residual %.3e +- %.3e (M=%zu); noise-free |residual| %.3e, %.3e, %.3e (ratios %.3f, %.3f)", e.mean,
              e.stderr, kEnergyPaths, r1, r2, r4, r1 / r2, r2 / r4)};
}

// --- 4 --------------------------------------------------------------------

Outcome exponential_moment() {
  auto b = SpectralBasis::build(2, kMonteCarloN, kEigenCut);
  auto noise = additive_noise(b);
  auto cfg = ensemble(b, &noise, {1.0, 1.0, 5.0, 0.0}, Regime::kAdditiveSupercritical, kMomentPaths, 4);
  auto [x, unused] = start_pair(b, 0.1, 0.0);
  (void)unused;
  const double k = b->lambda_first() * cfg.params.mu / (4.0 * noise.trace());
  auto rep = exp_moment_check(cfg, x, kMomentHorizon, k, 10);
  return {rep.pass(), fmt("k=%.4g bound %.4f; sup every 10 steps %.4f +- %.4f, every step %.4f +- %.4f", k, rep.bound,
                          rep.coarse.mean, rep.coarse.stderr, rep.fine.mean, rep.fine.stderr)};
}

// --- 5 --------------------------------------------------------------------

Outcome contraction() {
  auto b = SpectralBasis::build(2, kMonteCarloN, kEigenCut);
  auto noise = additive_noise(b);
  auto [x, y] = start_pair(b, 0.1, 0.1);
  std::vector<double> times;
  for (int i = 1; i <= 8; ++i) times.push_back(0.125 * i);
  Outcome o{true, ""};
  for (const auto& rc : additive_regimes()) {
    auto cfg = ensemble(b, &noise, rc.params, rc.regime, kContractionPaths, 5);
    auto rep = contraction_rate(cfg, x, y, times, CouplingMode::kTilted, kRateFraction);
    o.pass = o.pass && rep.pass();
    double worst = INFINITY;
    for (std::size_t i = 0; i < times.size(); ++i)
      worst = std::min(worst, rep.bound[i] - (rep.mean_w2[i] - kZ * rep.stderr_w2[i]));
    o.detail += fmt("%s[%s: rate %.3f +- %.3f vs theory %.3f, min bound slack %.3e] ", rep.pass() ? "" : "FAILED ",
                    rc.name.c_str(), rep.fitted_rate, rep.rate_halfwidth, rep.theory_rate, worst);
  }
  return o;
}

// --- 6 --------------------------------------------------------------------

Outcome girsanov() {
  auto b = SpectralBasis::build(2, kMonteCarloN, kEigenCut);
  auto noise = additive_noise(b);
  auto cfg = ensemble(b, &noise, {1.0, 1.0, 5.0, 0.0}, Regime::kAdditiveSupercritical, kGirsanovPaths, 6);
  auto [x, y] = start_pair(b, 0.1, 0.02);
  auto f = TestFunction::exp_lipschitz(VelocityField(b), 1.0);
  std::vector<NamedObservable> obs{{"|u|^2", [](const VelocityField& u) { return norm_h_sq(u); }},
                                   {"exp-lipschitz c=1", [f](const VelocityField& u) { return f.value(u); }}};
  Outcome o{true, ""};
  for (const auto& row : girsanov_consistency(cfg, x, y, {0.5, 1.0}, obs)) {
    bool ok = !row.degenerate && std::abs(row.z) <= kZ;
    o.pass = o.pass && ok;
    o.detail += fmt("%s[t=%.1f %s z=%.2f ess=%.0f] ", ok ? "" : "FAILED ", row.t, row.observable.c_str(), row.z, row.ess);
  }
  return o;
}

// --- 7 --------------------------------------------------------------------

Outcome entropy() {
  auto b = SpectralBasis::build(2, kMonteCarloN, kEigenCut);
  auto noise = additive_noise(b);
  auto mult = NoiseModel::multiplicative(b, std::sqrt(kTrace / double(NoiseModel::dof_count(*b))), 1.0, 0.5);
  auto [x, y] = start_pair(b, 0.1, 0.1);
  Outcome o{true, ""};
  auto run = [&](const std::string& name, const NoiseModel* nm, PhysParams p, Regime rg) {
    auto cfg = ensemble(b, nm, p, rg, kContractionPaths, 7);
    auto rep = entropy_check(cfg, x, y, 1.0, CouplingMode::kTilted);
    o.pass = o.pass && rep.pass();
    o.detail += fmt("%s[%s: E[Phi log Phi] %.3e +- %.1e, control %.3e +- %.1e, z=%.2f, bound %.3e] ",
                    rep.pass() ? "" : "FAILED ", name.c_str(), rep.from_log_phi.mean, rep.from_log_phi.stderr,
                    rep.from_control.mean, rep.from_control.stderr, rep.z, rep.bound);
  };
  for (const auto& rc : additive_regimes()) run(rc.name, &noise, rc.params, rc.regime);
  auto c = harnack_constants({1.0, 1.0, 5.0, 0.0}, mult, Regime::kMultiplicative);
  o.detail += fmt("(multiplicative L=%.3e, K=%.3f) ", c.lipschitz_sq, c.k_tilde);
  run("multiplicative q0=1 q1=0.5", &mult, {1.0, 1.0, 5.0, 0.0}, Regime::kMultiplicative);
  return o;
}

// --- 8 --------------------------------------------------------------------

Outcome log_harnack() {
  auto b = SpectralBasis::build(2, kMonteCarloN, kEigenCut);
  auto noise = additive_noise(b);
  auto [x, y] = start_pair(b, 0.1, 0.1);
  std::vector<TestFunction> fns;
  for (double c : {0.5, 1.0, 2.0}) fns.push_back(TestFunction::exp_lipschitz(VelocityField(b), c));
  Outcome o{true, ""};
  for (const auto& rc : additive_regimes()) {
    auto cfg = ensemble(b, &noise, rc.params, rc.regime, kHarnackPaths, 8);
    auto table = log_harnack_margin(cfg, x, y, {0.5, 1.0, 2.0, 4.0}, fns);
    double worst = INFINITY;
    for (const auto& row : table.rows) worst = std::min(worst, row.margin + kZ * row.combined_se);
    o.pass = o.pass && table.pass();
    o.detail += fmt("%s[%s: min margin+3SE %.3e, remainder consistent %s] ", table.pass() ? "" : "FAILED ",
                    rc.name.c_str(), worst, table.remainder_consistent ? "yes" : "no");
  }
  return o;
}

// --- 9 --------------------------------------------------------------------

Outcome gradient() {
  auto b = SpectralBasis::build(2, kMonteCarloN, kEigenCut);
  auto noise = additive_noise(b);
  auto cfg = ensemble(b, &noise, {1.0, 1.0, 5.0, 0.0}, Regime::kAdditiveSupercritical, kGradientPaths, 9);
  auto [x, y] = start_pair(b, 0.3, 0.1);
  (void)x;
  // caps sit above the typical distance so neither function is flat along the paths
  auto [a, unused] = start_pair(b, 0.2, 0.0);
  (void)unused;
  std::vector<TestFunction> fns{TestFunction::bounded_lipschitz(VelocityField(b), 1.0, 0.5),
                                TestFunction::bounded_lipschitz(-1.0 * a, 2.0, 1.0)};
  Outcome o{true, ""};
  for (const auto& row : gradient_bound_check(cfg, y, {1.0, 2.0}, fns, default_displacement(y), 2)) {
    o.pass = o.pass && row.pass;
    o.detail += fmt("%s[t=%.0f %s |grad| %.3e +- %.1e <= %.3e%s] ", row.pass ? "" : "FAILED ", row.t,
                    row.function.c_str(), row.max_abs, row.max_se, row.bound,
                    row.below_noise_floor ? " (noise floor)" : "");
  }
  return o;
}

// --- 10 -------------------------------------------------------------------

Outcome ergodicity() {
  auto b = SpectralBasis::build(2, kMonteCarloN, kEigenCut);
  auto noise = additive_noise(b);
  auto cfg = ensemble(b, &noise, {1.0, 1.0, 5.0, 0.0}, Regime::kAdditiveSupercritical, kErgodicPaths, 10);
  auto [x, y] = start_pair(b, 1.0, 1.0);
  auto ax = time_average(cfg, VelocityField(b), kErgodicHorizon, kErgodicBurnIn);
  auto ay = time_average(cfg, y, kErgodicHorizon, kErgodicBurnIn);
  (void)x;
  bool res_ok = std::abs(ax.residual.mean) <= kZ * ax.residual.stderr &&
                std::abs(ay.residual.mean) <= kZ * ay.residual.stderr;
  const double diff = ax.nu_h.mean - ay.nu_h.mean, se = std::hypot(ax.nu_h.stderr, ay.nu_h.stderr);
  bool uniq_ok = std::abs(diff) < kZ * se;
  return {res_ok && uniq_ok,
          fmt("residual %.3e +- %.1e (from 0), %.3e +- %.1e (from |y|=%.2f); nu(|u|^2) %.5e vs %.5e, diff %.2e, 3SE "
              "%.2e; recorded gaps nu_v - Tr/2mu %.3e, nu_L - Tr/2beta %.3e",
              ax.residual.mean, ax.residual.stderr, ay.residual.mean, ay.residual.stderr, norm_h(y), ax.nu_h.mean,
              ay.nu_h.mean, diff, kZ * se, ax.gap_v.mean, ax.gap_lr1.mean)};
}

// --- 11 -------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "scbf_acceptance_determinism";
  fs::remove_all(base);
  auto spec_for = [&](const std::string& body, const std::string& sub) {
    return parse_config("{" + body + R"(, "out": ")" + (base / sub).string() + "\"}");
  };
  const std::string couple = R"("command": "couple", "paths": 16, "T": 0.25, "x": {"kind": "random", "norm": 0.1},
      "girsanov_times": [0.25])";
  std::ostringstream log;
  // second run with a different worker count: reductions happen in trajectory order
  run_and_emit(spec_for(couple, "a"), log);
  const char* old = std::getenv("SCBF_WORKERS");
  std::string saved = old ? old : "";
  setenv("SCBF_WORKERS", "3", 1);
  run_and_emit(spec_for(couple, "b"), log);
  if (old)
    setenv("SCBF_WORKERS", saved.c_str(), 1);
  else
    unsetenv("SCBF_WORKERS");
  bool same = true;
  for (const char* f : {"records.json", "contraction.csv", "entropy.csv", "girsanov.csv"})
    same = same && !slurp(base / "a" / f).empty() && slurp(base / "a" / f) == slurp(base / "b" / f);

  const std::string sim = R"("paths": 1, "dt": 0.001, "checkpoint": true, "x": {"kind": "random", "norm": 0.5})";
  run_and_emit(spec_for(sim + R"(, "T": 0.3)", "c"), log);
  run_and_emit(
      spec_for(sim + R"(, "T": 0.6, "resume": ")" + (base / "c" / "checkpoint.json").string() + "\"", "d"), log);
  run_and_emit(spec_for(sim + R"(, "T": 0.6)", "e"), log);
  const auto resumed = slurp(base / "d" / "checkpoint.json"), whole = slurp(base / "e" / "checkpoint.json");
  bool resume_ok = !resumed.empty() && resumed == whole;
  return {same && resume_ok, fmt("repeat run byte-identical (1 vs 3 workers): %s; resume == uninterrupted: %s",
                                 same ? "yes" : "no", resume_ok ? "yes" : "no")};
}

}  // namespace

// Optional arguments pick a subset of criteria by number.
int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "operator identities", operator_identities},
      {2, "monotonicity", monotonicity},
      {3, "energy identity", energy_identity},
      {4, "exponential moment", exponential_moment},
      {5, "coupling contraction", contraction},
      {6, "Girsanov consistency", girsanov},
      {7, "entropy bound", entropy},
      {8, "asymptotic log-Harnack", log_harnack},
      {9, "gradient estimate", gradient},
      {10, "ergodicity", ergodicity},
      {11, "determinism", determinism},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.0f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed ? 1 : 0;
}
