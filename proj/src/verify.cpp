#include "scbf/verify.hpp"

#include <algorithm>
#include <cmath>

#include "scbf/errors.hpp"

namespace scbf {

TestFunction TestFunction::exp_lipschitz(VelocityField center, double c) {
  if (!(c >= 0.0)) throw InvalidArgument("test function scale must be nonnegative");
  TestFunction f;
  f.kind = Kind::kExpLipschitz;
  f.center = std::move(center);
  f.c = c;
  return f;
}

TestFunction TestFunction::bounded_lipschitz(VelocityField center, double c, double cap) {
  if (!(c >= 0.0) || !(cap > 0.0)) throw InvalidArgument("bounded test function needs c >= 0 and cap > 0");
  TestFunction f;
  f.kind = Kind::kBoundedLipschitz;
  f.center = std::move(center);
  f.c = c;
  f.cap = cap;
  return f;
}

double TestFunction::log_value(const VelocityField& u) const {
  if (kind != Kind::kExpLipschitz) throw InvalidArgument("log_value is defined for the exp-Lipschitz kind only");
  return c * std::sqrt(1.0 + norm_h_sq(u - center));
}

double TestFunction::value(const VelocityField& u) const {
  if (kind == Kind::kExpLipschitz) return std::exp(log_value(u));
  return std::min(c * norm_h(u - center), cap);
}

ErgodicAverage time_average(const EnsembleConfig& cfg, const VelocityField& x, double horizon, double burn_in) {
  if (!(horizon > burn_in) || burn_in < 0.0) throw InvalidArgument("time_average needs horizon > burn_in >= 0");
  const double dt = cfg.step.dt;
  const auto nb = step_count(burn_in, dt), nn = step_count(horizon, dt);
  const double span = horizon - burn_in;
  const PhysParams& p = cfg.params;
  struct Out {
    double v, l, h, term, res, gv, gl;
  };
  auto integs = cfg.make_integrators();
  auto outs = parallel_map<Out>(cfg.paths, integs.size(), [&](std::size_t i, std::size_t wk) {
    Path path(*integs[wk], x, cfg.seed, i);
    path.run(nb);
    EnergyLedger a = path.ledger();
    path.run(nn - nb);
    const EnergyLedger& b = path.ledger();
    Out o;
    o.v = (b.int_v - a.int_v) / span;
    o.l = (b.int_lr1 - a.int_lr1) / span;
    o.h = (b.int_h - a.int_h) / span;
    double tr = (b.int_trace - a.int_trace) / span;
    o.term = b.norm_h_sq;
    o.res = 2 * p.mu * o.v + 2 * p.beta * o.l + 2 * p.alpha * o.h - tr + (b.norm_h_sq - a.norm_h_sq) / span;
    o.gv = o.v - tr / (2 * p.mu);
    o.gl = o.l - tr / (2 * p.beta);
    return o;
  });
  auto col = [&](double Out::*m) {
    std::vector<double> v;
    for (const auto& o : outs) v.push_back(o.*m);
    return estimate(v);
  };
  ErgodicAverage avg;
  avg.horizon = horizon;
  avg.burn_in = burn_in;
  avg.nu_v = col(&Out::v);
  avg.nu_lr1 = col(&Out::l);
  avg.nu_h = col(&Out::h);
  avg.terminal_h = col(&Out::term);
  avg.residual = col(&Out::res);
  avg.gap_v = col(&Out::gv);
  avg.gap_lr1 = col(&Out::gl);
  avg.paths = cfg.paths;
  return avg;
}

namespace {

// samples[path][fn][time] of f (bounded kind) or log f (exp kind).
using Table = std::vector<std::vector<std::vector<double>>>;

Table sample_functions(const EnsembleConfig& cfg, const VelocityField& x, const std::vector<double>& times,
                       const std::vector<TestFunction>& fns, std::uint64_t first_trajectory) {
  auto steps = sample_steps(times, cfg.step.dt);
  auto integs = cfg.make_integrators();
  return parallel_map<std::vector<std::vector<double>>>(cfg.paths, integs.size(), [&](std::size_t i, std::size_t wk) {
    Path path(*integs[wk], x, cfg.seed, first_trajectory + i);
    std::vector<std::vector<double>> out(fns.size());
    for (auto s : steps) {
      path.run(s - path.step_index());
      for (std::size_t k = 0; k < fns.size(); ++k) {
        const auto& f = fns[k];
        out[k].push_back(f.kind == TestFunction::Kind::kExpLipschitz ? f.log_value(path.state()) : f.value(path.state()));
      }
    }
    return out;
  });
}

std::vector<double> slice(const Table& t, std::size_t k, std::size_t j) {
  std::vector<double> v;
  v.reserve(t.size());
  for (const auto& p : t) v.push_back(p[k][j]);
  return v;
}

SemigroupPoint summarize(const TestFunction& f, std::vector<double> s, double t) {
  SemigroupPoint pt;
  pt.t = t;
  std::vector<double> ones(s.size(), 1.0);
  if (f.kind == TestFunction::Kind::kExpLipschitz) {
    pt.pf = weighted_estimate(s, ones);
    pt.log_pf = log_mean_exp(s);
    pt.p_log_f = estimate(s);
    std::vector<double> twice(s);
    for (double& x : twice) x *= 2.0;
    pt.pf_sq = weighted_estimate(twice, ones);
  } else {
    pt.pf = estimate(s);
    std::vector<double> sq(s);
    for (double& x : sq) x *= x;
    pt.pf_sq = estimate(sq);
  }
  return pt;
}

}  // namespace

std::vector<std::vector<SemigroupPoint>> semigroup_mc(const EnsembleConfig& cfg, const VelocityField& x,
                                                     const std::vector<double>& times,
                                                     const std::vector<TestFunction>& fns,
                                                     std::uint64_t first_trajectory) {
  if (cfg.paths < 2) throw InvalidArgument("semigroup estimates need at least 2 paths");
  auto table = sample_functions(cfg, x, times, fns, first_trajectory);
  std::vector<std::vector<SemigroupPoint>> out(fns.size());
  for (std::size_t k = 0; k < fns.size(); ++k)
    for (std::size_t j = 0; j < times.size(); ++j) out[k].push_back(summarize(fns[k], slice(table, k, j), times[j]));
  return out;
}

bool HarnackTable::pass() const {
  if (!constants.valid() || !remainder_consistent) return false;
  return std::all_of(rows.begin(), rows.end(), [](const HarnackRow& r) { return r.pass; });
}

HarnackTable log_harnack_margin(const EnsembleConfig& cfg, const VelocityField& x, const VelocityField& y,
                                const std::vector<double>& times, const std::vector<TestFunction>& fns) {
  HarnackTable tab;
  tab.constants = cfg.constants();
  tab.constants.require();
  for (const auto& f : fns)
    if (f.kind != TestFunction::Kind::kExpLipschitz) throw InvalidArgument("log-Harnack check needs exp-Lipschitz functions");
  auto at_y = semigroup_mc(cfg, y, times, fns, 0);
  auto at_x = semigroup_mc(cfg, x, times, fns, cfg.paths);
  const double dist = norm_h(x - y), yn = norm_h_sq(y);
  for (std::size_t k = 0; k < fns.size(); ++k) {
    const HarnackRow* prev = nullptr;
    for (std::size_t j = 0; j < times.size(); ++j) {
      HarnackRow r;
      r.t = times[j];
      r.c = fns[k].c;
      r.lhs = at_y[k][j].p_log_f;
      r.log_pf_x = at_x[k][j].log_pf;
      auto hb = harnack_bound(tab.constants, dist, yn, r.t);
      r.penalty = hb.penalty;
      r.remainder = hb.remainder_coef * fns[k].lipschitz();
      r.rhs = r.log_pf_x.mean + r.penalty + r.remainder;
      r.margin = r.rhs - r.lhs.mean;
      r.combined_se = std::hypot(r.lhs.stderr, r.log_pf_x.stderr);
      r.pass = r.margin >= -3.0 * r.combined_se;
      r.excess = std::max(r.lhs.mean - r.log_pf_x.mean - r.penalty, 0.0);
      if (r.excess > r.remainder + 3.0 * r.combined_se) tab.remainder_consistent = false;
      if (prev && r.excess > prev->excess + 3.0 * std::hypot(r.combined_se, prev->combined_se))
        tab.remainder_consistent = false;
      tab.rows.push_back(r);
      prev = &tab.rows.back();
    }
  }
  return tab;
}

double default_displacement(const VelocityField& y) { return std::max(1e-2 * norm_h(y), 1e-3); }

std::vector<GradientRow> gradient_bound_check(const EnsembleConfig& cfg, const VelocityField& y,
                                              const std::vector<double>& times,
                                              const std::vector<TestFunction>& fns, double h,
                                              std::size_t directions) {
  if (!(h > 0.0)) throw InvalidArgument("displacement must be positive");
  if (directions == 0) throw InvalidArgument("need at least one direction");
  HarnackConstants c = cfg.constants();
  c.require();
  for (const auto& f : fns)
    if (f.kind != TestFunction::Kind::kBoundedLipschitz) throw InvalidArgument("gradient check needs bounded-Lipschitz functions");
  std::vector<VelocityField> dirs;
  for (std::size_t d = 0; d < directions; ++d) {
    auto e = random_field(cfg.basis, cfg.seed, d, 1.0, 2.0, Stream::kDirection);
    e *= 1.0 / norm_h(e);
    dirs.push_back(std::move(e));
  }
  // Per path: values at y, then (plus, minus) per direction, all on one noise path.
  auto steps = sample_steps(times, cfg.step.dt);
  auto integs = cfg.make_integrators();
  using PathOut = std::vector<std::vector<std::vector<double>>>;  // [start][fn][time]
  auto outs = parallel_map<PathOut>(cfg.paths, integs.size(), [&](std::size_t i, std::size_t wk) {
    std::vector<VelocityField> starts{y};
    for (const auto& d : dirs) {
      starts.push_back(y + h * d);
      starts.push_back(y - h * d);
    }
    PathOut out(starts.size(), std::vector<std::vector<double>>(fns.size()));
    for (std::size_t s = 0; s < starts.size(); ++s) {
      Path path(*integs[wk], starts[s], cfg.seed, i);
      for (auto st : steps) {
        path.run(st - path.step_index());
        for (std::size_t k = 0; k < fns.size(); ++k) out[s][k].push_back(fns[k].value(path.state()));
      }
    }
    return out;
  });
  const double yn = norm_h_sq(y);
  std::vector<GradientRow> rows;
  for (std::size_t k = 0; k < fns.size(); ++k)
    for (std::size_t j = 0; j < times.size(); ++j) {
      GradientRow r;
      r.t = times[j];
      r.function = "bounded(c=" + std::to_string(fns[k].c) + ",cap=" + std::to_string(fns[k].cap) + ")";
      r.h = h;
      RunningStats base;
      for (const auto& o : outs) base.add(o[0][k][j]);
      r.variance = base.variance();
      r.bound = gradient_bound(c, yn, r.t, r.variance, fns[k].lipschitz());
      r.pass = true;
      r.below_noise_floor = true;
      for (std::size_t d = 0; d < dirs.size(); ++d) {
        std::vector<double> fd;
        for (const auto& o : outs) fd.push_back((o[1 + 2 * d][k][j] - o[2 + 2 * d][k][j]) / (2.0 * h));
        Estimate e = estimate(fd);
        r.directional.push_back(e);
        if (std::abs(e.mean) >= r.max_abs) {
          r.max_abs = std::abs(e.mean);
          r.max_se = e.stderr;
        }
        if (std::abs(e.mean) - 3.0 * e.stderr > r.bound) r.pass = false;
        if (std::abs(e.mean) > e.stderr) r.below_noise_floor = false;
      }
      rows.push_back(std::move(r));
    }
  return rows;
}

MomentReport exp_moment_check(const EnsembleConfig& cfg, const VelocityField& x, double T, double k,
                              std::uint64_t coarse_every) {
  if (!(k >= 0.0)) throw InvalidArgument("k must be nonnegative");
  if (coarse_every == 0) throw InvalidArgument("coarse_every must be positive");
  const PhysParams& p = cfg.params;
  if (cfg.noise) {
    double g = cfg.noise->is_multiplicative() ? cfg.noise->q0() + cfg.noise->q1() : 1.0;
    double kmax = cfg.basis->lambda_first() * p.mu / (4.0 * g * g * cfg.noise->trace());
    if (k > kmax * (1 + 1e-12))
      throw InvalidArgument("k = " + std::to_string(k) + " exceeds lambda_1 mu / (4 Tr) = " + std::to_string(kmax));
  }
  const auto n = step_count(T, cfg.step.dt);
  auto integs = cfg.make_integrators();
  auto sups = parallel_map<std::pair<double, double>>(cfg.paths, integs.size(), [&](std::size_t i, std::size_t wk) {
    Path path(*integs[wk], x, cfg.seed, i);
    auto S = [&] {
      const auto& l = path.ledger();
      return l.norm_h_sq + p.mu * l.int_v + 2 * p.beta * l.int_lr1 - l.int_trace;
    };
    double fine = S(), coarse = fine;
    for (std::uint64_t s = 1; s <= n; ++s) {
      path.step();
      double v = S();
      fine = std::max(fine, v);
      if (s % coarse_every == 0 || s == n) coarse = std::max(coarse, v);
    }
    return std::pair{coarse, fine};
  });
  MomentReport rep;
  rep.k = k;
  rep.coarse_every = coarse_every;
  rep.bound = 2.0 * std::exp(k * norm_h_sq(x));
  std::vector<double> lc, lf, ones(sups.size(), 1.0);
  for (auto [c, f] : sups) {
    lc.push_back(k * c);
    lf.push_back(k * f);
  }
  rep.coarse = weighted_estimate(lc, ones);
  rep.fine = weighted_estimate(lf, ones);
  rep.pass_coarse = rep.coarse.mean - 3.0 * rep.coarse.stderr <= rep.bound;
  rep.pass_fine = rep.fine.mean - 3.0 * rep.fine.stderr <= rep.bound;
  return rep;
}

}  // namespace scbf
