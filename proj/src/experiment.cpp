#include "scbf/experiment.hpp"

#include <chrono>
#include <cmath>

#include "scbf/checkpoint.hpp"
#include "scbf/coupling.hpp"
#include "scbf/errors.hpp"
#include "scbf/properties.hpp"
#include "scbf/verify.hpp"

namespace scbf {

namespace {

void add_constants(MetricsRecord& r, const HarnackConstants& c) {
  r.constant("theta", c.harnack_theta);
  r.constant("gamma", c.harnack_gamma);
  r.constant("contraction_rate", c.contraction_rate);
  r.constant("k", c.k);
  r.constant("eta_hat", c.eta_hat);
  r.constant("L", c.lipschitz_sq);
  r.constant("K_tilde", c.k_tilde);
  r.constant("C_sigma", c.c_sigma);
  r.constant("Tr", c.trace);
  r.constant("lambda_cut", c.lambda_cut);
  r.constant("lambda_1", c.lambda_first);
}

MetricsRecord make_record(const ExperimentSpec& spec, const std::string& experiment) {
  MetricsRecord r;
  r.experiment = experiment;
  r.command = command_name(spec.command);
  return r;
}

std::vector<TestFunction> exp_functions(const ExperimentSpec& spec, const BasisPtr& b) {
  std::vector<TestFunction> fns;
  for (double c : spec.observables) fns.push_back(TestFunction::exp_lipschitz(VelocityField(b), c));
  return fns;
}

std::string c_label(double c) { return "c=" + format_number(c); }

// --- simulate ---------------------------------------------------------------

std::vector<MetricsRecord> run_simulate(const ExperimentSpec& spec, Workspace& ws) {
  MetricsRecord r = make_record(spec, "simulate");
  add_constants(r, ws.ensemble.constants());
  const auto& p = ws.ensemble.params;
  const std::filesystem::path out(spec.out);

  if (!spec.resume.empty()) {
    // Continue trajectory 0 to T from a saved cursor.
    auto cp = load_path_checkpoint(spec.resume, ws.basis);
    if (cp.seed != spec.seed || cp.trajectory != 0)
      throw ConfigError("resume: checkpoint was written with seed " + std::to_string(cp.seed) + ", trajectory " +
                        std::to_string(cp.trajectory) + "; expected seed " + std::to_string(spec.seed) + ", trajectory 0");
    const auto total = step_count(spec.T, spec.dt);
    if (cp.step > total) throw ConfigError("resume: checkpoint is past T");
    Integrator integ(p, ws.noise.get(), ws.ensemble.step, ws.basis);
    Path path(integ, cp.u, cp.ledger, cp.x_norm_sq, cp.seed, cp.trajectory, cp.step);
    path.run(total - path.step_index());
    r.add("norm_h_sq", path.time(), path.ledger().norm_h_sq);
    r.add("energy_residual", path.time(), path.energy_residual());
    r.constant("guard_warnings", double(path.guard_warnings()));
    if (spec.checkpoint)
      save_checkpoint(out / "checkpoint.json", PathCheckpoint{path.state(), path.ledger(), path.initial_norm_sq(),
                                                             path.seed(), path.trajectory(), path.step_index()});
    return {r};
  }

  const std::uint64_t total = step_count(spec.T, spec.dt);
  const std::uint64_t every = spec.sample_every == 0 ? std::max<std::uint64_t>(total, 1) : spec.sample_every;
  struct Out {
    std::vector<Sample> samples;
    std::uint64_t warnings;
    std::optional<PathCheckpoint> cp;
  };
  auto integs = ws.ensemble.make_integrators();
  auto outs = parallel_map<Out>(spec.paths, integs.size(), [&](std::size_t i, std::size_t wk) {
    Path path(*integs[wk], ws.x, spec.seed, i);
    Out o;
    o.samples.push_back({0.0, path.state(), path.ledger()});
    for (std::uint64_t s = 0; s < total;) {
      std::uint64_t n = std::min(every, total - s);
      path.run(n);
      s += n;
      o.samples.push_back({path.time(), path.state(), path.ledger()});
    }
    o.warnings = path.guard_warnings();
    if (i == 0 && spec.checkpoint)
      o.cp = PathCheckpoint{path.state(), path.ledger(), path.initial_norm_sq(), path.seed(), path.trajectory(),
                            path.step_index()};
    return o;
  });

  const double x_sq = norm_h_sq(ws.x);
  const std::size_t ns = outs.front().samples.size();
  std::uint64_t warnings = 0;
  for (const auto& o : outs) warnings += o.warnings;
  for (std::size_t k = 0; k < ns; ++k) {
    std::vector<double> h, res, mean_form, mart, qv;
    for (const auto& o : outs) {
      const auto& l = o.samples[k].ledger;
      h.push_back(l.norm_h_sq);
      res.push_back(energy_residual(l, x_sq, p));
      mean_form.push_back(res.back() + l.martingale);
      mart.push_back(l.martingale);
      qv.push_back(l.quad_var);
    }
    const double t = outs.front().samples[k].t;
    auto eh = estimate(h), er = estimate(res), ef = estimate(mean_form), em = estimate(mart), eq = estimate(qv);
    r.add("norm_h_sq", t, eh.mean, eh.stderr);
    r.add("energy_residual", t, er.mean, er.stderr);
    r.add("energy_identity", t, ef.mean, ef.stderr);
    r.add("martingale", t, em.mean, em.stderr);
    r.add("quad_var", t, eq.mean, eq.stderr);
  }
  r.constant("guard_warnings", double(warnings));
  r.constant("x_norm_sq", x_sq);

  if (total > 0 && spec.paths >= 2) {
    // Without the martingale subtracted the identity holds in mean.
    const auto& last = r.series[r.series.size() - 3];
    double margin = 3.0 * last.stderr - std::abs(last.value);
    r.verdict("energy_identity_mean", margin >= 0.0, margin, "|mean residual| <= 3 SE at T");
  }
  if (spec.checkpoint) save_checkpoint(out / "checkpoint.json", *outs.front().cp);
  return {r};
}

// --- couple -----------------------------------------------------------------

std::vector<MetricsRecord> run_couple(const ExperimentSpec& spec, Workspace& ws) {
  const auto mode = *parse_coupling_mode(spec.coupling);
  const auto c = ws.ensemble.constants();
  std::vector<MetricsRecord> out;

  MetricsRecord cr = make_record(spec, "contraction");
  add_constants(cr, c);
  auto rep = contraction_rate(ws.ensemble, ws.x, ws.y, spec.times, mode);
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    cr.add("mean_w2", rep.times[i], rep.mean_w2[i], rep.stderr_w2[i]);
    cr.add("bound", rep.times[i], rep.bound[i]);
  }
  cr.constant("fitted_rate", rep.fitted_rate);
  cr.constant("rate_halfwidth", rep.rate_halfwidth);
  cr.constant("theory_rate", rep.theory_rate);
  double worst = INFINITY;
  for (std::size_t i = 0; i < rep.times.size(); ++i)
    worst = std::min(worst, rep.bound[i] - (rep.mean_w2[i] - 3.0 * rep.stderr_w2[i]));
  cr.verdict("contraction_bound", rep.bound_ok, rep.times.empty() ? 0.0 : worst, "mean - 3 SE <= bound at every time");
  if (rep.fitted)
    cr.verdict("contraction_rate", rep.rate_ok, rep.fitted_rate + rep.rate_halfwidth - 0.9 * rep.theory_rate,
               "fitted rate + 95% halfwidth >= 0.9 theory");
  out.push_back(cr);

  MetricsRecord er = make_record(spec, "entropy");
  add_constants(er, c);
  auto ent = entropy_check(ws.ensemble, ws.x, ws.y, spec.T, mode);
  er.add("phi_log_phi", spec.T, ent.from_log_phi.mean, ent.from_log_phi.stderr);
  er.add("half_phi_int_h_sq", spec.T, ent.from_control.mean, ent.from_control.stderr);
  er.constant("bound", ent.bound);
  er.constant("z", ent.z);
  er.constant("ess", ent.ess);
  er.verdict("entropy_estimators_agree", ent.agree, 3.0 - std::abs(ent.z), "|z| <= 3");
  er.verdict("entropy_bound", ent.within_bound,
             ent.bound - (ent.from_log_phi.mean - 3.0 * ent.from_log_phi.stderr), "mean - 3 SE <= bound");
  out.push_back(er);

  if (!spec.girsanov_times.empty()) {
    MetricsRecord gr = make_record(spec, "girsanov");
    add_constants(gr, c);
    std::vector<NamedObservable> obs{{"norm_h_sq", [](const VelocityField& u) { return norm_h_sq(u); }}};
    auto f = TestFunction::exp_lipschitz(VelocityField(ws.basis), spec.observables.front());
    obs.push_back({"exp_lipschitz_" + c_label(f.c), [f](const VelocityField& u) { return f.value(u); }});
    for (const auto& row : girsanov_consistency(ws.ensemble, ws.x, ws.y, spec.girsanov_times, obs)) {
      gr.add("plain:" + row.observable, row.t, row.plain.mean, row.plain.stderr);
      gr.add("weighted:" + row.observable, row.t, row.weighted.mean, row.weighted.stderr);
      const std::string name = "girsanov:" + row.observable + "@t=" + format_number(row.t);
      if (row.degenerate)
        gr.verdict(name, false, -INFINITY, "effective sample size below threshold");
      else
        gr.verdict(name, std::abs(row.z) <= 3.0, 3.0 - std::abs(row.z), "|z| <= 3");
    }
    out.push_back(gr);
  }
  return out;
}

// --- ergodic ----------------------------------------------------------------

std::vector<MetricsRecord> run_ergodic(const ExperimentSpec& spec, Workspace& ws) {
  MetricsRecord r = make_record(spec, "ergodic");
  add_constants(r, ws.ensemble.constants());
  auto ax = time_average(ws.ensemble, ws.x, spec.T, spec.burn_in);
  auto ay = time_average(ws.ensemble, ws.y, spec.T, spec.burn_in);
  auto put = [&](const std::string& name, const Estimate& e) { r.add(name, spec.T, e.mean, e.stderr); };
  put("nu_v", ax.nu_v);
  put("nu_lr1", ax.nu_lr1);
  put("nu_h", ax.nu_h);
  put("residual", ax.residual);
  put("gap_v", ax.gap_v);
  put("gap_lr1", ax.gap_lr1);
  put("nu_h_from_y", ay.nu_h);
  put("residual_from_y", ay.residual);
  for (const auto* a : {&ax, &ay}) {
    double margin = 3.0 * a->residual.stderr - std::abs(a->residual.mean);
    r.verdict(a == &ax ? "residual_from_x" : "residual_from_y", margin >= 0.0, margin, "|residual| <= 3 SE");
  }
  const double diff = ax.nu_h.mean - ay.nu_h.mean;
  const double se = std::hypot(ax.nu_h.stderr, ay.nu_h.stderr);
  r.add("nu_h_difference", spec.T, diff, se);
  r.verdict("two_starts_agree", std::abs(diff) < 3.0 * se, 3.0 * se - std::abs(diff), "|nu_h(x) - nu_h(y)| < 3 SE");
  return {r};
}

// --- harnack ----------------------------------------------------------------

std::vector<MetricsRecord> run_harnack(const ExperimentSpec& spec, Workspace& ws) {
  MetricsRecord r = make_record(spec, "harnack");
  auto table = log_harnack_margin(ws.ensemble, ws.x, ws.y, spec.times, exp_functions(spec, ws.basis));
  add_constants(r, table.constants);
  for (const auto& row : table.rows) {
    const std::string c = c_label(row.c);
    r.add("lhs:" + c, row.t, row.lhs.mean, row.lhs.stderr);
    r.add("log_pf_x:" + c, row.t, row.log_pf_x.mean, row.log_pf_x.stderr);
    r.add("rhs:" + c, row.t, row.rhs, row.combined_se);
    r.add("remainder:" + c, row.t, row.remainder);
    r.add("excess:" + c, row.t, row.excess, row.combined_se);
    r.verdict("margin:" + c + "@t=" + format_number(row.t), row.pass, row.margin + 3.0 * row.combined_se,
              "lhs <= rhs + 3 SE");
  }
  r.verdict("remainder_decay", table.remainder_consistent, 0.0, "excess within remainder and nonincreasing in t");
  return {r};
}

// --- gradcheck --------------------------------------------------------------

std::vector<MetricsRecord> run_gradcheck(const ExperimentSpec& spec, Workspace& ws) {
  MetricsRecord r = make_record(spec, "gradcheck");
  add_constants(r, ws.ensemble.constants());
  std::vector<TestFunction> fns;
  for (double c : spec.observables) fns.push_back(TestFunction::bounded_lipschitz(VelocityField(ws.basis), c, spec.cap));
  const double h = spec.displacement > 0.0 ? spec.displacement : default_displacement(ws.y);
  r.constant("displacement", h);
  for (const auto& row : gradient_bound_check(ws.ensemble, ws.y, spec.times, fns, h, spec.directions)) {
    r.add("grad:" + row.function, row.t, row.max_abs, row.max_se);
    r.add("bound:" + row.function, row.t, row.bound);
    r.add("variance:" + row.function, row.t, row.variance);
    r.verdict("gradient:" + row.function + "@t=" + format_number(row.t), row.pass,
              row.bound + 3.0 * row.max_se - row.max_abs, row.below_noise_floor ? "below noise floor" : "");
  }
  return {r};
}

// --- proptest ---------------------------------------------------------------

std::vector<MetricsRecord> run_proptest(const ExperimentSpec& spec, Workspace& ws) {
  MetricsRecord r = make_record(spec, "proptest");
  Transformer tr(ws.basis);
  auto suites = operator_identity_suite(tr, spec.trials, spec.seed);
  for (auto& s : monotonicity_suite(tr, spec.trials, spec.seed)) suites.push_back(s);
  for (auto& s : noise_suite(ws.basis, spec.trials, spec.seed)) suites.push_back(s);
  for (const auto& s : suites) {
    r.add("violations:" + s.name, 0.0, double(s.violations));
    r.add("trials:" + s.name, 0.0, double(s.trials));
    r.verdict(s.name, s.pass(), -s.worst, std::to_string(s.violations) + " violations in " + std::to_string(s.trials));
  }
  return {r};
}

}  // namespace

std::vector<MetricsRecord> run_experiment(const ExperimentSpec& spec) {
  Workspace ws(spec);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<MetricsRecord> out;
  switch (spec.command) {
    case Command::kSimulate: out = run_simulate(spec, ws); break;
    case Command::kCouple: out = run_couple(spec, ws); break;
    case Command::kErgodic: out = run_ergodic(spec, ws); break;
    case Command::kHarnack: out = run_harnack(spec, ws); break;
    case Command::kGradcheck: out = run_gradcheck(spec, ws); break;
    case Command::kProptest: out = run_proptest(spec, ws); break;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto& r : out) r.wall_seconds = wall;
  return out;
}

int run_and_emit(const ExperimentSpec& spec, std::ostream& log) {
  try {
    auto records = run_experiment(spec);
    emit_records(records, spec.out, spec.formats);
    int failed = 0;
    for (const auto& r : records)
      for (const auto& v : r.verdicts)
        if (!v.pass) {
          ++failed;
          log << "FAIL " << r.experiment << " " << v.name << " margin " << format_number(v.margin)
              << (v.detail.empty() ? "" : " (" + v.detail + ")") << "\n";
        }
    log << (failed ? "verdicts failed: " + std::to_string(failed) : std::string("all verdicts pass")) << "\n";
    return failed ? kExitVerdict : kExitPass;
  } catch (const GuardAbort& e) {
    log << "guard abort: " << e.what() << "\n";
    return kExitGuard;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const HypothesisError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace scbf
