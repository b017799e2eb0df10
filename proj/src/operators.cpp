#include "scbf/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scbf/errors.hpp"

namespace scbf {

namespace {

constexpr Complex kI{0.0, 1.0};

// Grid slots; slot 0 belongs to the transformer.
constexpr int kSlotU = 1;     // 3 slots
constexpr int kSlotTmp = 4;
constexpr int kSlotAcc = 5;   // 3 slots
constexpr int kSlotOmega = 8;

std::vector<Complex>& mode_scratch(std::size_t n) {
  thread_local std::vector<Complex> buf;
  buf.resize(n);
  return buf;
}

// |u|^{r-1} from |u|^2.
inline double damping_factor(double m2, double r) {
  if (r == 5.0) return m2 * m2;
  if (r == 3.0) return m2;
  if (r == 2.0) return std::sqrt(m2);
  if (r == 1.0) return 1.0;
  if (m2 == 0.0) return 0.0;
  return std::pow(m2, 0.5 * (r - 1.0));
}

struct Slots {
  double* p[3] = {nullptr, nullptr, nullptr};
  Slots(Transformer& tr, int slot, int n) {
    for (int c = 0; c < n; ++c) p[c] = tr.grid_buffer(slot + c);
  }
  double* operator[](int c) const { return p[c]; }
};

void to_grid(Transformer& tr, const RawField& u, int slot) {
  const auto& b = u.basis();
  const int n = b.dimension();
  auto& s = mode_scratch(b.size());
  for (int c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < b.size(); ++i) s[i] = u.at(i, c);
    tr.scalar_to_grid(s, tr.grid_buffer(slot + c));
  }
}

VelocityField from_grid(Transformer& tr, int slot) {
  const auto& bp = tr.basis_ptr();
  const int n = bp->dimension();
  RawField raw(bp);
  auto& s = mode_scratch(bp->size());
  for (int c = 0; c < n; ++c) {
    tr.grid_to_scalar(tr.grid_buffer(slot + c), s);
    for (std::size_t i = 0; i < bp->size(); ++i) raw.at(i, c) = s[i];
  }
  return leray_project(raw);
}

// acc_i = sum_j u_j d_j v_i on the grid; u must already sit at kSlotU.
void convective_on_grid(Transformer& tr, const VelocityField& v) {
  const auto& b = v.basis();
  const int n = b.dimension();
  const std::size_t pts = tr.points();
  auto& s = mode_scratch(b.size());
  for (int i = 0; i < n; ++i) {
    double* acc = tr.grid_buffer(kSlotAcc + i);
    std::fill(acc, acc + pts, 0.0);
    for (int j = 0; j < n; ++j) {
      for (std::size_t m = 0; m < b.size(); ++m) s[m] = kI * double(b.wavevector(m)[j]) * v.at(m, i);
      double* d = tr.grid_buffer(kSlotTmp);
      tr.scalar_to_grid(s, d);
      const double* uj = tr.grid_buffer(kSlotU + j);
      for (std::size_t p = 0; p < pts; ++p) acc[p] += uj[p] * d[p];
    }
  }
}

void check_same(const VelocityField& a, const VelocityField& b) {
  if (!a.basis().same_as(b.basis())) throw MismatchError("operands are defined on different bases");
}

}  // namespace

void PhysParams::validate() const {
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (!(r >= 1.0)) throw InvalidArgument("r must be at least 1");
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be nonnegative");
}

VelocityField apply_A(const VelocityField& u) {
  VelocityField out = u;
  const auto& b = u.basis();
  const int n = b.dimension();
  for (std::size_t i = 0; i < b.size(); ++i)
    for (int c = 0; c < n; ++c) out.at(i, c) *= b.eigenvalue(i);
  return out;
}

VelocityField apply_B(Transformer& tr, const VelocityField& u, const VelocityField& v) {
  check_same(u, v);
  to_grid(tr, u, kSlotU);
  convective_on_grid(tr, v);
  return from_grid(tr, kSlotAcc);
}

double trilinear(Transformer& tr, const VelocityField& u, const VelocityField& v, const VelocityField& w) {
  return inner(apply_B(tr, u, v), w);
}

VelocityField apply_C(Transformer& tr, const VelocityField& u, double r) {
  if (!(r >= 1.0)) throw InvalidArgument("damping exponent r must be at least 1");
  if (r == 1.0) return u;
  const int n = u.basis().dimension();
  to_grid(tr, u, kSlotU);
  const std::size_t pts = tr.points();
  Slots g(tr, kSlotU, n), acc(tr, kSlotAcc, n);
  for (std::size_t p = 0; p < pts; ++p) {
    double m2 = 0.0;
    for (int c = 0; c < n; ++c) m2 += g[c][p] * g[c][p];
    double f = damping_factor(m2, r);
    for (int c = 0; c < n; ++c) acc[c][p] = f * g[c][p];
  }
  return from_grid(tr, kSlotAcc);
}

VelocityField apply_G(Transformer& tr, const VelocityField& u, const PhysParams& p) {
  VelocityField out = apply_A(u);
  out *= p.mu;
  out += nonlinear_term(tr, u, p).value;
  if (p.alpha > 0.0) out.axpy(p.alpha, u);
  return out;
}

double lp_power(Transformer& tr, const RawField& u, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("L^p norm requires p >= 1");
  const int n = u.basis().dimension();
  to_grid(tr, u, kSlotU);
  Slots g(tr, kSlotU, n);
  double s = 0.0;
  for (std::size_t q = 0; q < tr.points(); ++q) {
    double m2 = 0.0;
    for (int c = 0; c < n; ++c) m2 += g[c][q] * g[c][q];
    s += p == 2.0 ? m2 : (p == 4.0 ? m2 * m2 : std::pow(m2, 0.5 * p));
  }
  return s * tr.cell_volume();
}

NonlinearEval nonlinear_term(Transformer& tr, const VelocityField& u, const PhysParams& p) {
  const auto& b = u.basis();
  const int n = b.dimension();
  const std::size_t pts = tr.points();
  to_grid(tr, u, kSlotU);
  if (n == 2) {
    // Rotational form: P[(u.grad)u] = P[omega x u] since the gradient part is projected out exactly.
    auto& s = mode_scratch(b.size());
    for (std::size_t m = 0; m < b.size(); ++m) {
      const auto& k = b.wavevector(m);
      s[m] = kI * (double(k[0]) * u.at(m, 1) - double(k[1]) * u.at(m, 0));
    }
    tr.scalar_to_grid(s, tr.grid_buffer(kSlotOmega));
    const double* om = tr.grid_buffer(kSlotOmega);
    const double* u0 = tr.grid_buffer(kSlotU);
    const double* u1 = tr.grid_buffer(kSlotU + 1);
    double* f0 = tr.grid_buffer(kSlotAcc);
    double* f1 = tr.grid_buffer(kSlotAcc + 1);
    for (std::size_t q = 0; q < pts; ++q) {
      f0[q] = -om[q] * u1[q];
      f1[q] = om[q] * u0[q];
    }
  } else {
    convective_on_grid(tr, u);
  }
  NonlinearEval ev;
  Slots g(tr, kSlotU, n), acc(tr, kSlotAcc, n);
  double sum = 0.0, peak = 0.0;
  for (std::size_t q = 0; q < pts; ++q) {
    double m2 = 0.0;
    for (int c = 0; c < n; ++c) m2 += g[c][q] * g[c][q];
    double f = damping_factor(m2, p.r);
    sum += f * m2;
    peak = std::max(peak, f);
    double bf = p.beta * f;
    for (int c = 0; c < n; ++c) acc[c][q] += bf * g[c][q];
  }
  ev.lr1_power = sum * tr.cell_volume();
  ev.max_damping = peak;
  ev.value = from_grid(tr, kSlotAcc);
  return ev;
}

double monotone_shift(const PhysParams& p) {
  if (p.r <= 3.0) return 0.0;
  double r = p.r;
  return (r - 3.0) / (2.0 * p.mu * (r - 1.0)) * std::pow(2.0 / (p.beta * p.mu * (r - 1.0)), 2.0 / (r - 3.0));
}

double eta_hat(const PhysParams& p) { return 2.0 * monotone_shift(p); }

double local_shift(const PhysParams& p, double radius) {
  double r2 = radius * radius;
  return 27.0 * r2 * r2 / (32.0 * p.mu * p.mu * p.mu);
}

MonotoneRegime default_monotone_regime(int dimension, const PhysParams& p) {
  if (p.r > 3.0) return MonotoneRegime::kSupercritical;
  if (p.r == 3.0 && 2.0 * p.beta * p.mu >= 1.0) return MonotoneRegime::kCritical;
  if (dimension == 2) return MonotoneRegime::kLocal;
  throw HypothesisError("no monotonicity result covers n=" + std::to_string(dimension) + ", r=" + std::to_string(p.r) +
                        " (need r>3, or r=3 with 2 beta mu >= 1, or n=2 with r<=3)");
}

MonotonicityResult monotonicity_residual(Transformer& tr, const VelocityField& u, const VelocityField& v,
                                         const PhysParams& p, std::optional<MonotoneRegime> regime) {
  check_same(u, v);
  const int n = u.basis().dimension();
  MonotonicityResult res;
  res.regime = regime ? *regime : default_monotone_regime(n, p);
  switch (res.regime) {
    case MonotoneRegime::kSupercritical:
      if (p.r <= 3.0) throw HypothesisError("supercritical monotonicity requires r > 3");
      res.eta = monotone_shift(p);
      break;
    case MonotoneRegime::kCritical:
      if (p.r != 3.0 || 2.0 * p.beta * p.mu < 1.0)
        throw HypothesisError("critical monotonicity requires r = 3 and 2 beta mu >= 1");
      res.eta = 0.0;
      break;
    case MonotoneRegime::kLocal: {
      if (n != 2 || p.r > 3.0) throw HypothesisError("local monotonicity requires n = 2 and r <= 3");
      double radius = std::max(std::pow(lp_power(tr, u, 4.0), 0.25), std::pow(lp_power(tr, v, 4.0), 0.25));
      res.eta = local_shift(p, radius);
      break;
    }
  }
  VelocityField w = u - v;
  VelocityField g = apply_G(tr, u, p) - apply_G(tr, v, p);
  res.residual = inner(g, w) + res.eta * norm_h_sq(w);
  double s = norm_h(u) + norm_h(v);
  res.scale = s * s;
  return res;
}

DampingGap damping_gap(Transformer& tr, const VelocityField& u, const VelocityField& v, double r) {
  check_same(u, v);
  const int n = u.basis().dimension();
  VelocityField w = u - v;
  DampingGap gap;
  gap.pairing = inner(apply_C(tr, u, r) - apply_C(tr, v, r), w);
  to_grid(tr, u, kSlotU);
  to_grid(tr, v, kSlotAcc);
  Slots gu(tr, kSlotU, n), gv(tr, kSlotAcc, n);
  double plower = 0.0, wlower = 0.0;
  for (std::size_t q = 0; q < tr.points(); ++q) {
    double mu2 = 0.0, mv2 = 0.0, mw2 = 0.0;
    for (int c = 0; c < n; ++c) {
      double a = gu[c][q];
      double bb = gv[c][q];
      mu2 += a * a;
      mv2 += bb * bb;
      mw2 += (a - bb) * (a - bb);
    }
    plower += std::pow(mw2, 0.5 * (r + 1.0));
    wlower += 0.5 * (damping_factor(mu2, r) + damping_factor(mv2, r)) * mw2;
  }
  gap.power_lower = std::pow(2.0, 1.0 - r) * plower * tr.cell_volume();
  gap.weighted_lower = wlower * tr.cell_volume();
  return gap;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::kAdditive2dSubcritical:
      return "additive-2d-subcritical";
    case Regime::kAdditiveSupercritical:
      return "additive-supercritical";
    case Regime::kCritical:
      return "critical";
    case Regime::kMultiplicative:
      return "multiplicative";
  }
  return "unknown";
}

std::optional<Regime> parse_regime(const std::string& name) {
  for (Regime r : {Regime::kAdditive2dSubcritical, Regime::kAdditiveSupercritical, Regime::kCritical,
                   Regime::kMultiplicative})
    if (name == regime_name(r)) return r;
  return std::nullopt;
}

Regime infer_regime(int dimension, const PhysParams& p, NoiseKind kind) {
  if (kind == NoiseKind::kMultiplicative) return Regime::kMultiplicative;
  if (p.r > 3.0) return Regime::kAdditiveSupercritical;
  if (p.r == 3.0 && (dimension == 3 || p.beta * p.mu > 1.0)) return Regime::kCritical;
  return Regime::kAdditive2dSubcritical;
}

void HarnackConstants::require() const {
  if (valid()) return;
  std::string msg = std::string("regime ") + regime_name(regime) + " hypotheses fail:";
  for (const auto& v : violations) msg += " [" + v + "]";
  throw HypothesisError(msg);
}

HarnackConstants harnack_constants(const PhysParams& p, const NoiseModel& noise, Regime regime) {
  const auto& b = noise.basis();
  HarnackConstants c;
  c.regime = regime;
  c.lambda_first = b.lambda_first();
  c.lambda_cut = b.lambda_cut();
  c.trace = noise.trace();
  c.c_sigma = noise.c_sigma();
  c.lipschitz_sq = noise.lipschitz_sq();
  c.k_tilde = noise.k_tilde();
  c.eta = monotone_shift(p);
  c.eta_hat = eta_hat(p);

  const double mu = p.mu, lam = c.lambda_cut, tr = c.trace;
  c.k = c.lambda_first * mu / (4.0 * tr);
  c.k0 = c.lambda_first * mu / (2.0 * tr);
  const double sub_gap = mu * lam - c.k * tr;
  c.theta = 0.5 * sub_gap;
  c.gamma = mu * mu * c.c_sigma * c.c_sigma * lam * lam / (4.0 * sub_gap);
  const double sup_gap = mu * lam - c.eta_hat;
  c.theta_tilde = 0.5 * sup_gap;
  c.gamma_tilde = c.c_sigma * c.c_sigma * mu * mu * lam * lam / (8.0 * sup_gap);
  const double mul_gap = mu * lam - (c.eta_hat + c.lipschitz_sq);
  c.theta_hat = 0.5 * mul_gap;
  c.gamma_hat = c.k_tilde * c.k_tilde * mu * mu * lam * lam / (8.0 * mul_gap);

  auto fail = [&](const std::string& s) { c.violations.push_back(s); };
  const int n = b.dimension();
  switch (regime) {
    case Regime::kAdditive2dSubcritical:
      if (noise.is_multiplicative()) fail("additive regime needs an additive noise model");
      if (n != 2) fail("n = 2 required");
      if (p.r < 1.0 || p.r > 3.0) fail("1 <= r <= 3 required");
      if (c.lambda_first * mu * mu * mu < 8.0 * tr) fail("lambda_1 mu^3 >= 8 Tr(sigma sigma*)");
      if (sub_gap <= 0.0) fail("mu lambda_N0 > k Tr(sigma sigma*)");
      c.harnack_theta = c.theta;
      c.harnack_gamma = c.gamma;
      c.contraction_rate = c.theta;
      c.uses_moment_weight = true;
      break;
    case Regime::kAdditiveSupercritical:
      if (noise.is_multiplicative()) fail("additive regime needs an additive noise model");
      if (p.r <= 3.0) fail("r > 3 required");
      if (sup_gap <= 0.0) fail("mu lambda_N0 > eta_hat");
      c.harnack_theta = c.theta_tilde;
      c.harnack_gamma = c.gamma_tilde;
      c.contraction_rate = sup_gap;
      break;
    case Regime::kCritical:
      if (noise.is_multiplicative()) fail("additive regime needs an additive noise model");
      if (p.r != 3.0) fail("r = 3 required");
      if (!(p.beta * p.mu > 1.0)) fail("critical case requires beta mu > 1 for coupling");
      c.harnack_theta = 0.5 * mu * lam;
      c.harnack_gamma = c.c_sigma * c.c_sigma * mu * lam / 8.0;
      c.contraction_rate = mu * lam;
      break;
    case Regime::kMultiplicative:
      if (!noise.is_multiplicative()) fail("multiplicative regime needs a multiplicative noise model");
      if (p.r < 3.0) fail("r >= 3 required");
      if (p.r == 3.0) {
        if (!(p.beta * p.mu > 1.0)) fail("critical case requires beta mu > 1 for coupling");
        double gap = mu * lam - c.lipschitz_sq;
        if (gap <= 0.0) fail("mu lambda_N0 > L");
        c.harnack_theta = 0.5 * gap;
        c.harnack_gamma = c.k_tilde * c.k_tilde * mu * mu * lam * lam / (8.0 * gap);
        c.contraction_rate = gap;
      } else {
        if (mul_gap <= 0.0) fail("mu lambda_N0 > eta_hat + L");
        c.harnack_theta = c.theta_hat;
        c.harnack_gamma = c.gamma_hat;
        c.contraction_rate = mul_gap;
      }
      break;
  }
  return c;
}

HarnackBound harnack_bound(const HarnackConstants& c, double dist, double y_norm_sq, double t) {
  HarnackBound hb;
  if (c.uses_moment_weight) {
    double wgt = std::exp(c.k * y_norm_sq);
    hb.penalty = c.harnack_gamma * wgt * dist * dist;
    hb.remainder_coef = 2.0 * std::exp(-c.harnack_theta * t) * wgt * dist;
  } else {
    hb.penalty = c.harnack_gamma * dist * dist;
    hb.remainder_coef = std::exp(-c.harnack_theta * t) * dist;
  }
  return hb;
}

double contraction_bound(const HarnackConstants& c, double dist_sq, double y_norm_sq, double t) {
  if (c.uses_moment_weight) return 2.0 * std::exp(-c.contraction_rate * t + c.k * y_norm_sq) * dist_sq;
  return std::exp(-c.contraction_rate * t) * dist_sq;
}

double entropy_bound(const HarnackConstants& c, double dist_sq, double y_norm_sq) {
  if (c.uses_moment_weight) return c.harnack_gamma * std::exp(c.k * y_norm_sq) * dist_sq;
  return c.harnack_gamma * dist_sq;
}

double gradient_bound(const HarnackConstants& c, double y_norm_sq, double t, double variance, double lipschitz) {
  double sd = std::sqrt(std::max(variance, 0.0));
  if (c.uses_moment_weight) {
    double wgt = std::exp(c.k * y_norm_sq);
    return std::sqrt(2.0 * c.harnack_gamma * wgt) * sd + 2.0 * std::exp(-c.harnack_theta * t + c.k * y_norm_sq) * lipschitz;
  }
  return std::sqrt(c.harnack_gamma) * sd + std::exp(-c.harnack_theta * t) * lipschitz;
}

}  // namespace scbf
