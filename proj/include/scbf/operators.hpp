#pragma once

// Stokes operator A, convective term B, damping C(u) = P(|u|^{r-1} u) and G = mu A + B + beta C.
//
// B is evaluated pseudo-spectrally on the 2N grid, which is alias-free for the quadratic product.
// C is evaluated pointwise on the same grid; for non-integer r the truncation is not exact, but
// <C(u), w> always equals the grid quadrature of |u|^{r-1} u . w for band-limited w.

#include <optional>
#include <string>
#include <vector>

#include "scbf/noise.hpp"
#include "scbf/spectral.hpp"

namespace scbf {

struct PhysParams {
  double mu = 1.0;
  double beta = 1.0;
  double r = 5.0;
  double alpha = 0.0;

  /// Throws InvalidArgument unless mu > 0, beta > 0, r >= 1, alpha >= 0.
  void validate() const;
};

VelocityField apply_A(const VelocityField& u);
/// P((u . grad) v).
VelocityField apply_B(Transformer& tr, const VelocityField& u, const VelocityField& v);
/// b(u, v, w) = <B(u, v), w>.
double trilinear(Transformer& tr, const VelocityField& u, const VelocityField& v, const VelocityField& w);
VelocityField apply_C(Transformer& tr, const VelocityField& u, double r);
/// mu A u + B(u, u) + beta C(u) + alpha u.
VelocityField apply_G(Transformer& tr, const VelocityField& u, const PhysParams& p);

/// Grid quadrature of |u|^p.
double lp_power(Transformer& tr, const RawField& u, double p);

/// One fused evaluation of B(u,u) + beta C(u) plus the grid diagnostics the integrator needs.
struct NonlinearEval {
  VelocityField value;
  double lr1_power = 0.0;   // ||u||_{L^{r+1}}^{r+1}
  double max_damping = 0.0; // max_x |u(x)|^{r-1}
};
NonlinearEval nonlinear_term(Transformer& tr, const VelocityField& u, const PhysParams& p);

/// Shift making G + eta I monotone for r > 3.
double monotone_shift(const PhysParams& p);
/// The doubled shift used by the coupling and multiplicative estimates (zero for r <= 3).
double eta_hat(const PhysParams& p);
/// Local monotonicity shift on an L^4 ball of radius `radius` (n = 2, r <= 3): 27 radius^4 / (32 mu^3).
double local_shift(const PhysParams& p, double radius);

enum class MonotoneRegime { kSupercritical, kCritical, kLocal };

struct MonotonicityResult {
  double residual = 0.0;  // <G(u)-G(v), u-v> + eta ||u-v||^2
  double eta = 0.0;
  double scale = 0.0;     // (||u|| + ||v||)^2, for relative tolerances
  MonotoneRegime regime = MonotoneRegime::kSupercritical;
};

/// Picks the applicable regime from (n, r, beta mu); throws HypothesisError when none applies.
MonotoneRegime default_monotone_regime(int dimension, const PhysParams& p);
MonotonicityResult monotonicity_residual(Transformer& tr, const VelocityField& u, const VelocityField& v,
                                         const PhysParams& p, std::optional<MonotoneRegime> regime = std::nullopt);

/// Terms of the pointwise damping inequalities for w = u - v.
struct DampingGap {
  double pairing = 0.0;       // <C(u) - C(v), w>
  double power_lower = 0.0;   // 2^{1-r} ||w||_{L^{r+1}}^{r+1}
  double weighted_lower = 0.0;  // (||u|^{(r-1)/2} w||^2 + ||v|^{(r-1)/2} w||^2) / 2
};
DampingGap damping_gap(Transformer& tr, const VelocityField& u, const VelocityField& v, double r);

enum class Regime { kAdditive2dSubcritical, kAdditiveSupercritical, kCritical, kMultiplicative };

const char* regime_name(Regime r);
std::optional<Regime> parse_regime(const std::string& name);
/// Regime implied by (n, r, beta mu, noise kind).
Regime infer_regime(int dimension, const PhysParams& p, NoiseKind kind);

struct HarnackConstants {
  Regime regime = Regime::kAdditiveSupercritical;
  double lambda_first = 1.0;
  double lambda_cut = 1.0;
  double trace = 0.0;
  double c_sigma = 0.0;
  double lipschitz_sq = 0.0;
  double k_tilde = 0.0;

  double eta = 0.0;
  double eta_hat = 0.0;
  double k = 0.0;
  double k0 = 0.0;
  double theta = 0.0;
  double gamma = 0.0;
  double theta_tilde = 0.0;
  double gamma_tilde = 0.0;
  double theta_hat = 0.0;
  double gamma_hat = 0.0;

  // Regime-selected values.
  double harnack_theta = 0.0;   // decay rate of the remainder
  double harnack_gamma = 0.0;   // entropy / penalty coefficient
  double contraction_rate = 0.0;  // mean-square rate of E||u - v||^2
  bool uses_moment_weight = false;  // bounds carry e^{k ||y||^2}

  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
  /// Throws HypothesisError listing the failed inequalities.
  void require() const;
};

HarnackConstants harnack_constants(const PhysParams& p, const NoiseModel& noise, Regime regime);

/// Theta(x,y) and Psi_t(x,y) of the log-Harnack bound for the selected regime.
struct HarnackBound {
  double penalty = 0.0;         // Theta(x, y)
  double remainder_coef = 0.0;  // Psi_t(x, y)
};
HarnackBound harnack_bound(const HarnackConstants& c, double dist, double y_norm_sq, double t);
/// Bound on E||u(t) - v(t)||^2 under the tilted measure.
double contraction_bound(const HarnackConstants& c, double dist_sq, double y_norm_sq, double t);
/// Closed-form bound on E[Phi log Phi].
double entropy_bound(const HarnackConstants& c, double dist_sq, double y_norm_sq);
/// Bound on ||grad P_t f(y)|| given the variance of f under P_t and ||grad f||_inf.
double gradient_bound(const HarnackConstants& c, double y_norm_sq, double t, double variance, double lipschitz);

}  // namespace scbf
