#pragma once

// Experiment description: one JSON document, strict schema, hypotheses checked on load.
//
// Schema (all keys optional unless noted, defaults shown):
//   command      "simulate" | "couple" | "ergodic" | "harnack" | "gradcheck" | "proptest"
//   n 2, N 16, eigen_cut 4.5
//   mu 1, beta 1, r 5, alpha 0
//   noise        { kind "additive"|"multiplicative", amplitude 0.05 | [per-dof list], q0 1, q1 0 }
//   regime       tag; inferred from (n, r, beta mu, noise kind) when absent, must match when given
//   dt 1e-3, T 1, seed 1, paths 100, sample_every 0 (0 = only t = 0 and T)
//   split_on_guard false
//   x            initial state { kind "zero"|"mode"|"random"|"file", k [1,0,0], polarization 0,
//                amplitude 0.1, id 0, norm 0.1, decay 2, path "" }
//   y            second state, same kinds plus "offset" (x + distance * unit random field:
//                { kind "offset", distance 0.1, id 1, low_only false })
//   times        sample times for couple / harnack / gradcheck
//   girsanov_times  extra Girsanov comparison times for couple (empty = skip)
//   coupling     "tilted" | "weighted"
//   observables  scales c of the test functions [0.5, 1, 2]
//   cap 1        cap of the bounded test functions
//   burn_in 0, directions 2, displacement 0 (0 = 1e-2 ||y||, floor 1e-3)
//   trials 1000  proptest size
//   checkpoint false   write the final state of trajectory 0 (simulate)
//   resume ""         continue trajectory 0 from a checkpoint file (simulate)
//   out ".", formats ["csv","json"]

#include <array>
#include <memory>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scbf/noise.hpp"
#include "scbf/operators.hpp"
#include "scbf/parallel.hpp"
#include "scbf/spectral.hpp"

namespace scbf {

enum class Command { kSimulate, kCouple, kErgodic, kHarnack, kGradcheck, kProptest };
const char* command_name(Command c);
std::optional<Command> parse_command(const std::string& s);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kAdditive;
  double amplitude = 0.05;
  std::vector<double> amplitudes;  // overrides `amplitude` when nonempty
  double q0 = 1.0;
  double q1 = 0.0;
};

struct InitialSpec {
  std::string kind = "zero";
  std::array<int, 3> k{1, 0, 0};
  int polarization = 0;
  double amplitude = 0.1;
  std::uint64_t id = 0;
  double norm = 0.1;
  double decay = 2.0;
  std::string path;
  double distance = 0.1;
  bool low_only = false;
};

struct ExperimentSpec {
  Command command = Command::kSimulate;
  int n = 2;
  int N = 16;
  double eigen_cut = 4.5;
  PhysParams params;
  NoiseSpec noise;
  Regime regime = Regime::kAdditiveSupercritical;
  double dt = 1e-3;
  double T = 1.0;
  std::uint64_t seed = 1;
  std::size_t paths = 100;
  std::uint64_t sample_every = 0;
  bool split_on_guard = false;
  InitialSpec x;
  InitialSpec y = [] {
    InitialSpec s;
    s.kind = "offset";
    s.id = 1;
    return s;
  }();
  std::vector<double> times;
  std::vector<double> girsanov_times;
  std::string coupling = "tilted";
  std::vector<double> observables{0.5, 1.0, 2.0};
  double cap = 1.0;
  double burn_in = 0.0;
  std::size_t directions = 2;
  double displacement = 0.0;
  std::size_t trials = 1000;
  bool checkpoint = false;
  std::string resume;
  std::string out = ".";
  std::vector<std::string> formats{"csv", "json"};

  /// Canonical form: every key, fixed order. parse_config(to_json().dump()) == *this.
  nlohmann::ordered_json to_json() const;
  bool operator==(const ExperimentSpec& o) const { return to_json() == o.to_json(); }
};

/// Parses and validates; throws ConfigError naming the offending key path.
ExperimentSpec parse_config(const std::string& text);
ExperimentSpec spec_from_json(const nlohmann::json& doc);
/// Re-runs the semantic checks (used after command-line overrides).
void validate_spec(ExperimentSpec& spec);

/// Objects built from a validated spec. Owns the noise model the ensemble config points at.
struct Workspace {
  BasisPtr basis;
  std::unique_ptr<NoiseModel> noise;
  EnsembleConfig ensemble;
  VelocityField x;
  VelocityField y;

  explicit Workspace(const ExperimentSpec& spec);
};

VelocityField make_initial(const InitialSpec& s, const BasisPtr& basis, std::uint64_t seed,
                           const VelocityField* anchor = nullptr);

}  // namespace scbf
