#include "scbf/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scbf/errors.hpp"

namespace scbf {

const char* coupling_mode_name(CouplingMode m) { return m == CouplingMode::kWeighted ? "weighted" : "tilted"; }

std::optional<CouplingMode> parse_coupling_mode(const std::string& name) {
  if (name == "weighted") return CouplingMode::kWeighted;
  if (name == "tilted") return CouplingMode::kTilted;
  return std::nullopt;
}

CoupledPath::CoupledPath(Integrator& integrator, VelocityField x, VelocityField y, CouplingMode mode,
                         std::uint64_t seed, std::uint64_t trajectory)
    : CoupledPath(integrator, CouplingState{std::move(x), std::move(y)}, mode, seed, trajectory) {}

CoupledPath::CoupledPath(Integrator& integrator, CouplingState state, CouplingMode mode, std::uint64_t seed,
                         std::uint64_t trajectory)
    : integ_(&integrator), s_(std::move(state)), mode_(mode), seed_(seed), trajectory_(trajectory) {
  if (!integ_->noise()) throw InvalidArgument("coupling needs a noise model");
  const auto& b = *integ_->basis_ptr();
  if (!s_.u.basis().same_as(b) || !s_.v.basis().same_as(b)) throw MismatchError("coupled states use a different basis");
  feedback_ = 0.5 * integ_->params().mu * b.lambda_cut();
}

void CoupledPath::step() {
  // Guard splitting is a plain-path feature; coupled runs only count violations.
  const NoiseModel& noise = *integ_->noise();
  const PhysParams& p = integ_->params();
  const double dt = integ_->options().dt;
  auto dw = integ_->brownian({seed_, trajectory_, s_.step, Stream::kNoise}, dt);

  VelocityField wl = low_part(s_.u - s_.v);
  const double gu = noise.gain(&s_.u), gv = noise.gain(&s_.v);
  h_ = noise.inverse_coordinates(wl, &s_.u);
  double hsq = 0.0, hdw = 0.0;
  for (std::size_t j = 0; j < h_.size(); ++j) {
    h_[j] *= feedback_;
    hsq += h_[j] * h_[j];
    hdw += h_[j] * dw[j];
  }

  NonlinearEval nu = integ_->evaluate(s_.u), nv = integ_->evaluate(s_.v);
  if (dt * p.beta * std::max(nu.max_damping, nv.max_damping) >= 1.0) ++guard_warnings_;
  VelocityField inc_u = noise.apply(dw, gu), inc_v = noise.apply(dw, gv);
  VelocityField un(s_.u.basis_ptr()), vn(s_.v.basis_ptr());
  if (mode_ == CouplingMode::kWeighted) {
    VelocityField drift = (feedback_ * gv / gu) * wl;  // sigma(v) h
    un = integ_->advance(s_.u, nu.value, &inc_u, nullptr, dt);
    vn = integ_->advance(s_.v, nv.value, &inc_v, &drift, dt);
    s_.log_phi += -hdw - 0.5 * hsq * dt;
  } else {
    VelocityField drift = (-feedback_) * wl;  // -sigma(u) h
    un = integ_->advance(s_.u, nu.value, &inc_u, &drift, dt);
    vn = integ_->advance(s_.v, nv.value, &inc_v, nullptr, dt);
    s_.log_phi += -hdw + 0.5 * hsq * dt;
  }
  integ_->check_state(un, trajectory_, s_.step);
  integ_->check_state(vn, trajectory_, s_.step);
  s_.int_h_sq += hsq * dt;
  s_.u = std::move(un);
  s_.v = std::move(vn);
  ++s_.step;
  s_.t = double(s_.step) * dt;
}

void CoupledPath::run(std::uint64_t steps) {
  for (std::uint64_t i = 0; i < steps; ++i) step();
}

namespace {

double zscore(double diff, double se) {
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

struct CoupledSamples {
  std::vector<double> w2, log_phi, int_h_sq;
  std::vector<std::vector<double>> obs;  // [observable][time]
};

std::vector<CoupledSamples> run_coupled(const EnsembleConfig& cfg, const VelocityField& x, const VelocityField& y,
                                        const std::vector<std::uint64_t>& steps, CouplingMode mode,
                                        const std::vector<NamedObservable>& observables) {
  auto integs = cfg.make_integrators();
  return parallel_map<CoupledSamples>(cfg.paths, integs.size(), [&](std::size_t i, std::size_t wk) {
    CoupledPath path(*integs[wk], x, y, mode, cfg.seed, i);
    CoupledSamples out;
    out.obs.resize(observables.size());
    for (auto s : steps) {
      path.run(s - path.state().step);
      const auto& st = path.state();
      out.w2.push_back(norm_h_sq(st.u - st.v));
      out.log_phi.push_back(st.log_phi);
      out.int_h_sq.push_back(st.int_h_sq);
      for (std::size_t k = 0; k < observables.size(); ++k) out.obs[k].push_back(observables[k].fn(st.v));
    }
    return out;
  });
}

template <class F>
std::vector<double> column(const std::vector<CoupledSamples>& s, F&& get) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(get(x));
  return out;
}

}  // namespace

std::pair<double, double> fit_log_slope(const std::vector<double>& t, const std::vector<double>& mean,
                                        const std::vector<double>& se) {
  if (t.empty()) throw InvalidArgument("nothing to fit");
  const double lo = 0.25 * t.back();
  std::vector<double> xs, ys, ws;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < lo || !(mean[i] > 0.0)) continue;
    double rel = se[i] / mean[i];
    xs.push_back(t[i]);
    ys.push_back(std::log(mean[i]));
    ws.push_back(1.0 / std::max(rel * rel, 1e-24));
  }
  if (xs.size() < 3) throw InvalidArgument("rate fit needs at least 3 positive sample times in [T/4, T]");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    sx += ws[i] * xs[i];
    sy += ws[i] * ys[i];
  }
  double xb = sx / sw, yb = sy / sw, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += ws[i] * (xs[i] - xb) * (xs[i] - xb);
    sxy += ws[i] * (xs[i] - xb) * (ys[i] - yb);
  }
  return {sxy / sxx, std::sqrt(1.0 / sxx)};
}

ContractionReport contraction_rate(const EnsembleConfig& cfg, const VelocityField& x, const VelocityField& y,
                                   const std::vector<double>& times, CouplingMode mode, double rate_fraction) {
  HarnackConstants c = cfg.constants();
  c.require();
  ContractionReport rep;
  rep.times = times;
  rep.theory_rate = c.contraction_rate;
  const double d2 = norm_h_sq(x - y), yn = norm_h_sq(y);
  const std::size_t nt = times.size();
  if (d2 == 0.0) {
    rep.mean_w2.assign(nt, 0.0);
    rep.stderr_w2.assign(nt, 0.0);
    rep.bound.assign(nt, 0.0);
    rep.ess.assign(nt, double(cfg.paths));
    rep.note = "x = y: nothing to contract, fit skipped";
    return rep;
  }
  if (nt < 3) throw InvalidArgument("contraction fit needs at least 3 sample times");
  auto steps = sample_steps(times, cfg.step.dt);
  auto samples = run_coupled(cfg, x, y, steps, mode, {});
  for (std::size_t j = 0; j < nt; ++j) {
    auto w2 = column(samples, [j](const CoupledSamples& s) { return s.w2[j]; });
    Estimate e;
    double ess = double(cfg.paths);
    if (mode == CouplingMode::kTilted) {
      e = estimate(w2);
    } else {
      auto lp = column(samples, [j](const CoupledSamples& s) { return s.log_phi[j]; });
      e = weighted_estimate(lp, w2);
      ess = effective_sample_size(lp);
    }
    rep.mean_w2.push_back(e.mean);
    rep.stderr_w2.push_back(e.stderr);
    rep.ess.push_back(ess);
    rep.bound.push_back(contraction_bound(c, d2, yn, times[j]));
    if (e.mean - 3.0 * e.stderr > rep.bound.back()) rep.bound_ok = false;
  }
  auto [slope, se] = fit_log_slope(rep.times, rep.mean_w2, rep.stderr_w2);
  rep.fitted = true;
  rep.fitted_rate = -slope;
  rep.rate_halfwidth = 1.96 * se;
  rep.rate_ok = rep.fitted_rate + rep.rate_halfwidth >= rate_fraction * rep.theory_rate;
  return rep;
}

std::vector<GirsanovRow> girsanov_consistency(const EnsembleConfig& cfg, const VelocityField& x,
                                              const VelocityField& y, const std::vector<double>& times,
                                              const std::vector<NamedObservable>& observables,
                                              double min_ess_fraction) {
  if (!cfg.noise) throw InvalidArgument("Girsanov comparison needs a noise model");
  auto steps = sample_steps(times, cfg.step.dt);
  auto coupled = run_coupled(cfg, x, y, steps, CouplingMode::kWeighted, observables);

  // Direct runs from y on trajectory ids disjoint from the coupled ensemble.
  auto integs = cfg.make_integrators();
  auto plain = parallel_map<std::vector<std::vector<double>>>(cfg.paths, integs.size(), [&](std::size_t i, std::size_t wk) {
    Path path(*integs[wk], y, cfg.seed, cfg.paths + i);
    std::vector<std::vector<double>> out(observables.size());
    for (auto s : steps) {
      path.run(s - path.step_index());
      for (std::size_t k = 0; k < observables.size(); ++k) out[k].push_back(observables[k].fn(path.state()));
    }
    return out;
  });

  std::vector<GirsanovRow> rows;
  for (std::size_t j = 0; j < times.size(); ++j) {
    auto lp = column(coupled, [j](const CoupledSamples& s) { return s.log_phi[j]; });
    const double ess = effective_sample_size(lp);
    const bool degenerate = ess < min_ess_fraction * double(cfg.paths);
    GirsanovRow phi{times[j], "Phi", {1.0, 0.0}, weighted_estimate(lp, std::vector<double>(lp.size(), 1.0))};
    phi.z = zscore(phi.weighted.mean - 1.0, phi.weighted.stderr);
    phi.ess = ess;
    phi.degenerate = degenerate;
    rows.push_back(phi);
    for (std::size_t k = 0; k < observables.size(); ++k) {
      auto wv = column(coupled, [j, k](const CoupledSamples& s) { return s.obs[k][j]; });
      std::vector<double> pv;
      for (const auto& p : plain) pv.push_back(p[k][j]);
      GirsanovRow row{times[j], observables[k].name, estimate(pv), weighted_estimate(lp, wv)};
      row.z = zscore(row.weighted.mean - row.plain.mean, std::hypot(row.weighted.stderr, row.plain.stderr));
      row.ess = ess;
      row.degenerate = degenerate;
      rows.push_back(row);
    }
  }
  return rows;
}

EntropyReport entropy_check(const EnsembleConfig& cfg, const VelocityField& x, const VelocityField& y, double t,
                            CouplingMode mode) {
  HarnackConstants c = cfg.constants();
  c.require();
  EntropyReport rep;
  const double d2 = norm_h_sq(x - y);
  rep.bound = entropy_bound(c, d2, norm_h_sq(y));
  rep.ess = double(cfg.paths);
  if (d2 == 0.0) return rep;
  std::vector<double> times{t};
  auto samples = run_coupled(cfg, x, y, sample_steps(times, cfg.step.dt), mode, {});
  auto a = column(samples, [](const CoupledSamples& s) { return s.log_phi[0]; });
  auto b = column(samples, [](const CoupledSamples& s) { return 0.5 * s.int_h_sq[0]; });
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  Estimate ed;
  if (mode == CouplingMode::kTilted) {
    rep.from_log_phi = estimate(a);
    rep.from_control = estimate(b);
    ed = estimate(diff);
  } else {
    rep.from_log_phi = weighted_estimate(a, a);
    rep.from_control = weighted_estimate(a, b);
    ed = weighted_estimate(a, diff);
    rep.ess = effective_sample_size(a);
  }
  rep.z = zscore(ed.mean, ed.stderr);
  rep.agree = std::abs(rep.z) <= 3.0;
  rep.within_bound = rep.from_log_phi.mean - 3.0 * rep.from_log_phi.stderr <= rep.bound &&
                     rep.from_control.mean - 3.0 * rep.from_control.stderr <= rep.bound;
  return rep;
}

double young_gap(const std::vector<double>& f, const std::vector<double>& g) {
  if (f.size() != g.size() || f.empty()) throw InvalidArgument("young_gap needs equal nonempty samples");
  const double n = double(f.size());
  double ef = 0, efg = 0, eflogf = 0;
  double gmax = *std::max_element(g.begin(), g.end());
  double seg = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0) throw InvalidArgument("young_gap needs f >= 0");
    ef += f[i];
    efg += f[i] * g[i];
    if (f[i] > 0.0) eflogf += f[i] * std::log(f[i]);
    seg += std::exp(g[i] - gmax);
  }
  ef /= n;
  efg /= n;
  eflogf /= n;
  double log_eeg = gmax + std::log(seg / n);
  double rhs = ef * log_eeg + eflogf - (ef > 0.0 ? ef * std::log(ef) : 0.0);
  return rhs - efg;
}

}  // namespace scbf
