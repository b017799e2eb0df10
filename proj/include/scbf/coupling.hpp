#pragma once

// Controlled companion process and the Girsanov bookkeeping around it.
//
// Both processes see one Brownian draw per step. The control acts on the forced block only:
//   h = (mu lambda_cut / 2) sigma(u)^{-1} (u - v)^l
// and the density of the shifted driving noise is tracked in log space.
//
// Weighted mode samples under the base measure: u is the plain solution, v carries the
// drift sigma(v) h, and expectations under the tilted measure are Phi-weighted averages.
// Tilted mode samples under the tilted measure directly: v is the plain solution, u carries
// the drift -sigma(u) h, and Phi is still the density of the tilted measure w.r.t. the base one.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scbf/integrator.hpp"
#include "scbf/parallel.hpp"

namespace scbf {

enum class CouplingMode { kWeighted, kTilted };
const char* coupling_mode_name(CouplingMode m);
std::optional<CouplingMode> parse_coupling_mode(const std::string& name);

struct CouplingState {
  VelocityField u;
  VelocityField v;
  double log_phi = 0.0;   // log dQ/dP on F_t
  double int_h_sq = 0.0;  // int_0^t ||h||^2 ds
  double t = 0.0;
  std::uint64_t step = 0;

  VelocityField w() const { return u - v; }
};

class CoupledPath {
 public:
  /// Needs an integrator with a noise model.
  CoupledPath(Integrator& integrator, VelocityField x, VelocityField y, CouplingMode mode, std::uint64_t seed,
              std::uint64_t trajectory);
  /// Resume from a saved state.
  CoupledPath(Integrator& integrator, CouplingState state, CouplingMode mode, std::uint64_t seed,
              std::uint64_t trajectory);

  void step();
  void run(std::uint64_t steps);

  const CouplingState& state() const { return s_; }
  CouplingMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t trajectory() const { return trajectory_; }
  std::uint64_t guard_warnings() const { return guard_warnings_; }
  /// mu lambda_cut / 2.
  double feedback() const { return feedback_; }
  /// Control coordinates h used by the last step (one per noise dof).
  const std::vector<double>& last_control() const { return h_; }

 private:
  Integrator* integ_;
  CouplingState s_;
  CouplingMode mode_;
  std::uint64_t seed_;
  std::uint64_t trajectory_;
  std::uint64_t guard_warnings_ = 0;
  double feedback_;
  std::vector<double> h_;
};

/// Ensemble estimates of E||w(t)||^2 under the tilted measure and a fitted decay rate.
struct ContractionReport {
  std::vector<double> times;
  std::vector<double> mean_w2;
  std::vector<double> stderr_w2;
  std::vector<double> bound;
  std::vector<double> ess;  // effective sample size per time (= paths in tilted mode)
  bool fitted = false;
  double fitted_rate = 0.0;
  double rate_halfwidth = 0.0;  // 95%
  double theory_rate = 0.0;
  bool bound_ok = true;
  bool rate_ok = true;
  std::string note;
  bool pass() const { return bound_ok && rate_ok; }
};

/// Weighted least squares slope of log(mean) against t on [T/4, T]; returns (slope, stderr).
std::pair<double, double> fit_log_slope(const std::vector<double>& t, const std::vector<double>& mean,
                                        const std::vector<double>& se);

/// `rate_fraction` is the share of the theory rate the fit must reach (0.9 by default).
ContractionReport contraction_rate(const EnsembleConfig& cfg, const VelocityField& x, const VelocityField& y,
                                   const std::vector<double>& times, CouplingMode mode, double rate_fraction = 0.9);

using Observable = std::function<double(const VelocityField&)>;

struct NamedObservable {
  std::string name;
  Observable fn;
};

struct GirsanovRow {
  double t = 0.0;
  std::string observable;  // "Phi" for the normalization row
  Estimate plain;          // E[phi(u(t,y))]
  Estimate weighted;       // E[Phi(t) phi(v(t,y))]
  double z = 0.0;
  double ess = 0.0;
  bool degenerate = false;  // ess below the threshold
};

/// Compares direct simulation from y against Phi-weighted coupled runs from (x, y).
std::vector<GirsanovRow> girsanov_consistency(const EnsembleConfig& cfg, const VelocityField& x,
                                              const VelocityField& y, const std::vector<double>& times,
                                              const std::vector<NamedObservable>& observables,
                                              double min_ess_fraction = 0.05);

struct EntropyReport {
  Estimate from_log_phi;   // E[Phi log Phi]
  Estimate from_control;   // (1/2) E[Phi int ||h||^2]
  double z = 0.0;          // paired difference over its standard error
  double bound = 0.0;
  double ess = 0.0;
  bool agree = true;
  bool within_bound = true;
  bool pass() const { return agree && within_bound; }
};

EntropyReport entropy_check(const EnsembleConfig& cfg, const VelocityField& x, const VelocityField& y, double t,
                            CouplingMode mode);

/// rhs - lhs of  E[fg] <= E[f] log E[e^g] + E[f log f] - E[f] log E[f]  on the empirical measure.
double young_gap(const std::vector<double>& f, const std::vector<double>& g);

}  // namespace scbf
