#pragma once

// Semi-implicit Euler-Maruyama for the Galerkin system
//   (1 + dt (mu lambda_k + alpha)) u_{n+1} = u_n - dt [B(u_n) + beta C(u_n)] + sigma(u_n) dW_n
// together with a running record of the terms of the energy identity.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "scbf/noise.hpp"
#include "scbf/operators.hpp"
#include "scbf/random.hpp"
#include "scbf/spectral.hpp"

namespace scbf {

struct EnergyLedger {
  double t = 0.0;
  double norm_h_sq = 0.0;    // ||u(t)||_H^2
  double int_v = 0.0;        // int_0^t ||u||_V^2 (trapezoid)
  double int_lr1 = 0.0;      // int_0^t ||u||_{L^{r+1}}^{r+1} (trapezoid)
  double int_h = 0.0;        // int_0^t ||u||_H^2 (trapezoid; enters only when alpha > 0)
  double martingale = 0.0;   // M(t) = 2 sum (sigma dW, u_n)
  double quad_var = 0.0;     // <M>(t) = 4 sum sum_j (g sigma_j (u_n, phi_j))^2 dt
  double int_trace = 0.0;    // int_0^t Tr(sigma(u) sigma(u)*)

  /// M(t) - (k0/2) <M>(t).
  double compensated(double k0) const { return martingale - 0.5 * k0 * quad_var; }
  bool operator==(const EnergyLedger&) const = default;
};

/// ||u(t)||^2 + 2 mu int V + 2 beta int L^{r+1} + 2 alpha int H - ||x||^2 - int Tr - M(t).
double energy_residual(const EnergyLedger& ledger, double x_norm_sq, const PhysParams& p);

struct StepOptions {
  double dt = 1e-3;
  bool split_on_guard = false;  // halve the step (Brownian bridge) when dt beta max|u|^{r-1} >= 1
  int max_splits = 6;
  double abort_norm = 1e6;
};

/// Number of steps to reach T; throws unless T is an integer multiple of dt (to 1e-9 relative).
std::uint64_t step_count(double T, double dt);

/// Stepping engine bound to one basis. Holds FFT workspaces, so use one per thread.
class Integrator {
 public:
  /// `noise` may be null for deterministic runs.
  Integrator(PhysParams params, const NoiseModel* noise, StepOptions options, BasisPtr basis);

  const PhysParams& params() const { return params_; }
  const NoiseModel* noise() const { return noise_; }
  const StepOptions& options() const { return options_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  Transformer& transformer() { return tr_; }

  NonlinearEval evaluate(const VelocityField& u) { return nonlinear_term(tr_, u, params_); }

  /// One implicit solve: (u - h nl + increment + h drift) / (1 + h (mu lambda_k + alpha)).
  VelocityField advance(const VelocityField& u, const VelocityField& nl, const VelocityField* increment,
                        const VelocityField* drift, double h) const;

  /// Brownian coordinates dW_j = sqrt(dt) xi_j for a step key (empty for noise-free runs).
  std::vector<double> brownian(const RandomKey& key, double dt) const;

  /// Throws GuardAbort for non-finite or oversized states.
  void check_state(const VelocityField& u, std::uint64_t trajectory, std::uint64_t step) const;

 private:
  PhysParams params_;
  const NoiseModel* noise_;
  StepOptions options_;
  BasisPtr basis_;
  Transformer tr_;
};

/// One trajectory of the plain (uncoupled) system, addressed by (seed, trajectory id).
class Path {
 public:
  Path(Integrator& integrator, VelocityField x, std::uint64_t seed, std::uint64_t trajectory);
  /// Resumes from a saved cursor.
  Path(Integrator& integrator, VelocityField u, EnergyLedger ledger, double x_norm_sq, std::uint64_t seed,
       std::uint64_t trajectory, std::uint64_t step);

  void step();
  void run(std::uint64_t steps);

  const VelocityField& state() const { return u_; }
  const EnergyLedger& ledger() const { return ledger_; }
  double time() const { return ledger_.t; }
  std::uint64_t step_index() const { return step_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t trajectory() const { return trajectory_; }
  double initial_norm_sq() const { return x_norm_sq_; }
  std::uint64_t guard_warnings() const { return guard_warnings_; }
  /// ||u||_{L^{r+1}}^{r+1} and max |u|^{r-1} at the current state.
  const NonlinearEval& current_eval();
  double energy_residual() const;

 private:
  void substep(const std::vector<double>& dw, double h, int depth, std::uint64_t bridge_id);

  Integrator* integ_;
  VelocityField u_;
  EnergyLedger ledger_;
  double x_norm_sq_ = 0.0;
  std::uint64_t seed_ = 0;
  std::uint64_t trajectory_ = 0;
  std::uint64_t step_ = 0;
  std::uint64_t guard_warnings_ = 0;
  std::optional<NonlinearEval> cache_;
};

struct Sample {
  double t = 0.0;
  VelocityField u;
  EnergyLedger ledger;
};

/// Runs to T and records the state every `sample_every` steps (and at t = 0 and T).
std::vector<Sample> simulate(Integrator& integrator, const VelocityField& x, double T, std::uint64_t sample_every,
                             std::uint64_t seed, std::uint64_t trajectory);

}  // namespace scbf
