#include "scbf/properties.hpp"

#include <algorithm>
#include <cmath>

namespace scbf {

double trial_scale(std::uint64_t id) {
  static const double scales[] = {0.05, 0.3, 1.0, 2.0, 4.0};
  return scales[id % 5];
}

namespace {

// Records a defect (positive = violation).
void record(SuiteResult& s, double defect) {
  ++s.trials;
  if (s.trials == 1 || defect > s.worst) s.worst = defect;
  if (defect > 0.0 || std::isnan(defect)) ++s.violations;
}

}  // namespace

std::vector<SuiteResult> operator_identity_suite(Transformer& tr, std::size_t trials, std::uint64_t seed) {
  const BasisPtr& b = tr.basis_ptr();
  const double lam1 = b->lambda_first();
  SuiteResult b0{"b(u,v,v) = 0"}, anti{"b(u,v,w) = -b(u,w,v)"}, stokes{"<Au,u> = |u|_V^2"}, poinc{"|u|_V^2 >= lambda_1 |u|_H^2"},
      lady{"|B(u,u)|_V' <= sqrt(2/lambda_1) |u|_V^2"};
  std::vector<SuiteResult> damp;
  const double rs[] = {2.0, 3.0, 5.0};
  for (double r : rs) damp.push_back({"<C(u),u> = |u|_{L^{r+1}}^{r+1}, r=" + std::to_string(int(r))});

  for (std::uint64_t id = 0; id < trials; ++id) {
    const double s = trial_scale(id);
    auto u = random_field(b, seed, 3 * id, s), v = random_field(b, seed, 3 * id + 1, s),
         w = random_field(b, seed, 3 * id + 2, s);
    const double uv = norm_v(u), vv = norm_v(v), wv = norm_v(w);

    auto buv = apply_B(tr, u, v);
    record(b0, std::abs(inner(buv, v)) - 1e-10 * norm_h(u) * vv * vv);
    double b1 = inner(buv, w), b2 = trilinear(tr, u, w, v);
    record(anti, std::abs(b1 + b2) - 1e-10 * uv * vv * wv);

    double vsq = norm_v_sq(u);
    record(stokes, std::abs(inner(apply_A(u), u) - vsq) - 1e-12 * vsq);
    record(poinc, lam1 * norm_h_sq(u) - vsq * (1 + 1e-12));

    record(lady, norm_v_dual(apply_B(tr, u, u)) - std::sqrt(2.0 / lam1) * vsq * (1 + 1e-12));

    for (std::size_t i = 0; i < std::size(rs); ++i) {
      double q = lp_power(tr, u, rs[i] + 1);
      record(damp[i], std::abs(inner(apply_C(tr, u, rs[i]), u) - q) - 1e-8 * q);
    }
  }

  // Hemicontinuity: the defect <G(u + l v) - G(u), w> should shrink at least linearly in l.
  SuiteResult hemi{"<G(u + l v), w> -> <G(u), w>, order >= 1"};
  const std::size_t hemi_trials = std::max<std::size_t>(1, trials / 100);
  for (double r : rs) {
    PhysParams p{1.0, 1.0, r, 0.0};
    for (std::uint64_t id = 0; id < hemi_trials; ++id) {
      auto u = random_field(b, seed + 1, 3 * id, 1.0), v = random_field(b, seed + 1, 3 * id + 1, 1.0),
           w = random_field(b, seed + 1, 3 * id + 2, 1.0);
      const double g0 = inner(apply_G(tr, u, p), w);
      const double e1 = std::abs(inner(apply_G(tr, u + 1e-3 * v, p), w) - g0);
      const double e2 = std::abs(inner(apply_G(tr, u + 1e-4 * v, p), w) - g0);
      const double order = std::log10(e1 / e2);
      record(hemi, 0.95 - order);
    }
  }

  std::vector<SuiteResult> out{b0, anti, stokes, poinc, lady};
  out.insert(out.end(), damp.begin(), damp.end());
  out.push_back(hemi);
  return out;
}

std::vector<SuiteResult> monotonicity_suite(Transformer& tr, std::size_t trials, std::uint64_t seed) {
  const BasisPtr& b = tr.basis_ptr();
  struct Case {
    std::string name;
    PhysParams p;
    MonotoneRegime regime;
  };
  std::vector<Case> cases{
      {"r=5, mu=1, beta=1", {1.0, 1.0, 5.0, 0.0}, MonotoneRegime::kSupercritical},
      {"r=5, mu=0.3, beta=2", {0.3, 2.0, 5.0, 0.0}, MonotoneRegime::kSupercritical},
      {"r=5, mu=2, beta=0.1", {2.0, 0.1, 5.0, 0.0}, MonotoneRegime::kSupercritical},
      {"r=3, 2 beta mu = 1, eta = 0", {1.0, 0.5, 3.0, 0.0}, MonotoneRegime::kCritical},
      {"r=3, 2 beta mu = 4, eta = 0", {1.0, 2.0, 3.0, 0.0}, MonotoneRegime::kCritical},
      {"n=2, r=2, L^4-ball shift", {1.0, 1.0, 2.0, 0.0}, MonotoneRegime::kLocal},
  };
  std::vector<SuiteResult> out;
  for (const auto& c : cases) {
    if (c.regime == MonotoneRegime::kLocal && b->dimension() != 2) continue;  // two-dimensional estimate only
    SuiteResult s{"monotone: " + c.name};
    for (std::uint64_t id = 0; id < trials; ++id) {
      const double sc = trial_scale(id);
      auto u = random_field(b, seed, 2 * id, sc), v = random_field(b, seed, 2 * id + 1, sc);
      auto m = monotonicity_residual(tr, u, v, c.p, c.regime);
      record(s, -m.residual - 1e-9 * m.scale);
    }
    out.push_back(s);
  }
  for (double r : {3.0, 4.0, 5.0}) {
    SuiteResult lower{"<C(u)-C(v),u-v> >= 2^{1-r} |u-v|_{L^{r+1}}^{r+1}, r=" + std::to_string(int(r))};
    SuiteResult strong{"<C(u)-C(v),u-v> >= weighted half sum, r=" + std::to_string(int(r))};
    for (std::uint64_t id = 0; id < trials; ++id) {
      const double sc = trial_scale(id);
      auto u = random_field(b, seed + 7, 2 * id, sc), v = random_field(b, seed + 7, 2 * id + 1, sc);
      auto g = damping_gap(tr, u, v, r);
      double tol = 1e-9 * std::max(std::abs(g.pairing), 1e-300);
      record(lower, g.power_lower - g.pairing - tol);
      record(strong, g.weighted_lower - g.pairing - tol);
    }
    out.push_back(lower);
    out.push_back(strong);
  }
  return out;
}

std::vector<SuiteResult> noise_suite(const BasisPtr& basis, std::size_t trials, std::uint64_t seed) {
  std::vector<double> amp(NoiseModel::dof_count(*basis));
  for (std::size_t j = 0; j < amp.size(); ++j) amp[j] = 0.01 + 0.02 * double((j * 7) % 5);
  auto add = NoiseModel::additive(basis, amp);
  auto mult = NoiseModel::multiplicative(basis, amp, 1.0, 0.5);
  SuiteResult degen{"increment vanishes off the forced block"}, inv{"|sigma^-1 w| <= C_sigma |w|"},
      inv_m{"|sigma(u)^-1 w| <= K |w|"}, lip{"|sigma(u1)-sigma(u2)|_HS^2 <= L |u1-u2|^2"},
      bounded{"gain <= q0 + q1"};
  for (std::uint64_t id = 0; id < trials; ++id) {
    const double s = trial_scale(id);
    auto u1 = random_field(basis, seed, 2 * id, s), u2 = random_field(basis, seed, 2 * id + 1, s);
    auto inc = mult.sample_increment(&u1, 1e-2, {seed, id, 0, Stream::kNoise});
    auto [lo, hi] = split_low_high(inc.field);
    record(degen, norm_h(hi));
    auto w = random_low_field(basis, seed + 1, id, s);
    record(inv, norm_h(add.inverse_on_low(w, nullptr)) - add.c_sigma() * norm_h(w) * (1 + 1e-14));
    record(inv_m, norm_h(mult.inverse_on_low(w, &u1)) - mult.k_tilde() * norm_h(w) * (1 + 1e-14));
    record(lip, mult.hs_distance_sq(u1, u2) - mult.lipschitz_sq() * norm_h_sq(u1 - u2) * (1 + 1e-12));
    record(bounded, mult.gain(&u1) - (mult.q0() + mult.q1()));
  }
  return {degen, inv, inv_m, lip, bounded};
}

}  // namespace scbf
