#pragma once

// Ensemble estimators for the long-time behaviour of the semigroup: time averages,
// semigroup values, log-Harnack margins, finite-difference gradients and exponential moments.

#include <cstdint>
#include <string>
#include <vector>

#include "scbf/coupling.hpp"
#include "scbf/parallel.hpp"

namespace scbf {

/// Closed-form test functions with exact Lipschitz constants.
struct TestFunction {
  enum class Kind { kExpLipschitz, kBoundedLipschitz };
  Kind kind = Kind::kExpLipschitz;
  VelocityField center;
  double c = 1.0;
  double cap = 1.0;  // bounded kind only

  /// log f(u) = c sqrt(1 + ||u - a||^2).
  static TestFunction exp_lipschitz(VelocityField center, double c);
  /// g(u) = min(c ||u - a||, cap).
  static TestFunction bounded_lipschitz(VelocityField center, double c, double cap);

  double value(const VelocityField& u) const;
  /// log f for the exp kind; throws for the bounded kind.
  double log_value(const VelocityField& u) const;
  /// ||grad log f||_inf (exp kind) or ||grad g||_inf (bounded kind); both equal c.
  double lipschitz() const { return c; }
};

struct ErgodicAverage {
  double horizon = 0.0;
  double burn_in = 0.0;
  Estimate nu_v;     // time average of ||u||_V^2 over [burn_in, horizon]
  Estimate nu_lr1;   // time average of ||u||_{L^{r+1}}^{r+1}
  Estimate nu_h;     // time average of ||u||_H^2
  Estimate terminal_h;  // E||u(horizon)||^2
  /// 2 mu nu_v + 2 beta nu_lr1 + 2 alpha nu_h - Tr + (E||u(n)||^2 - E||u(burn)||^2) / (n - burn).
  Estimate residual;
  // Single-functional gaps: nu_v - Tr/(2 mu) and nu_lr1 - Tr/(2 beta), recorded only.
  Estimate gap_v;
  Estimate gap_lr1;
  std::size_t paths = 0;
};

/// Ensemble of cfg.paths trajectories from x, averaged over [burn_in, horizon].
ErgodicAverage time_average(const EnsembleConfig& cfg, const VelocityField& x, double horizon, double burn_in);

struct SemigroupPoint {
  double t = 0.0;
  Estimate pf;       // P_t f(x) (exp kind: mean of f)
  Estimate log_pf;   // log P_t f(x), via log-mean-exp
  Estimate p_log_f;  // P_t log f(x)
  Estimate pf_sq;    // P_t f^2 (for variances)
};

/// Plain Monte Carlo from x at each time for each function; trajectory ids start at `first_trajectory`.
std::vector<std::vector<SemigroupPoint>> semigroup_mc(const EnsembleConfig& cfg, const VelocityField& x,
                                                     const std::vector<double>& times,
                                                     const std::vector<TestFunction>& fns,
                                                     std::uint64_t first_trajectory = 0);

struct HarnackRow {
  double t = 0.0;
  double c = 0.0;
  Estimate lhs;          // P_t log f(y)
  Estimate log_pf_x;     // log P_t f(x)
  double penalty = 0.0;  // Theta(x, y)
  double remainder = 0.0;  // Psi_t(x, y) ||grad log f||
  double rhs = 0.0;
  double margin = 0.0;     // rhs - lhs
  double combined_se = 0.0;
  bool pass = false;
  /// max(lhs - log P_t f(x) - Theta, 0): the part of the gap only the remainder can pay for.
  double excess = 0.0;
};

struct HarnackTable {
  HarnackConstants constants;
  std::vector<HarnackRow> rows;
  /// Excess bounded by the remainder and nonincreasing in t within CI, per function.
  bool remainder_consistent = true;
  bool pass() const;
};

/// Runs paths from x and from y once and evaluates every exp-kind function at every time.
HarnackTable log_harnack_margin(const EnsembleConfig& cfg, const VelocityField& x, const VelocityField& y,
                                const std::vector<double>& times, const std::vector<TestFunction>& fns);

struct GradientRow {
  double t = 0.0;
  std::string function;
  double h = 0.0;
  std::vector<Estimate> directional;  // FD derivative along each unit direction
  double max_abs = 0.0;
  double max_se = 0.0;   // standard error of the direction attaining max_abs
  double variance = 0.0;  // P_t g^2 - (P_t g)^2 at y
  double bound = 0.0;
  bool pass = false;
  bool below_noise_floor = false;  // every derivative is within one SE of zero
};

/// Default displacement 1e-2 ||y|| with floor 1e-3.
double default_displacement(const VelocityField& y);

/// Central differences with common random numbers along `directions` random unit fields.
std::vector<GradientRow> gradient_bound_check(const EnsembleConfig& cfg, const VelocityField& y,
                                              const std::vector<double>& times,
                                              const std::vector<TestFunction>& fns, double h,
                                              std::size_t directions);

struct MomentReport {
  double k = 0.0;
  double bound = 0.0;       // 2 e^{k ||x||^2}
  Estimate coarse;          // sup over every `coarse_every` steps
  Estimate fine;            // sup over every step
  std::uint64_t coarse_every = 0;
  bool pass_coarse = false;
  bool pass_fine = false;
  bool pass() const { return pass_coarse && pass_fine; }
};

/// Monte Carlo estimate of E exp(k sup_t S_t), S_t = ||u||^2 + mu int V + 2 beta int L^{r+1} - int Tr.
/// k must not exceed lambda_1 mu / (4 Tr).
MomentReport exp_moment_check(const EnsembleConfig& cfg, const VelocityField& x, double T, double k,
                              std::uint64_t coarse_every);

}  // namespace scbf
