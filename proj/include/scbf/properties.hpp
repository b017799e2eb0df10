#pragma once

// Randomized property suites over the operators and noise models. Each check counts
// violations of an identity or inequality over seeded random fields; a suite passes
// with zero violations.

#include <cstdint>
#include <string>
#include <vector>

#include "scbf/noise.hpp"
#include "scbf/operators.hpp"
#include "scbf/spectral.hpp"

namespace scbf {

struct SuiteResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // largest normalized defect seen (<= 0 means comfortably satisfied)
  bool pass() const { return violations == 0; }
};

/// Field amplitude for trial `id`: cycles over several decades so small and large fields both appear.
double trial_scale(std::uint64_t id);

/// Trilinear identities, Stokes pairing, Poincare, damping pairing, Ladyzhenskaya bound, hemicontinuity.
std::vector<SuiteResult> operator_identity_suite(Transformer& tr, std::size_t trials, std::uint64_t seed);

/// Monotonicity residuals in the three regimes plus the damping lower bounds.
std::vector<SuiteResult> monotonicity_suite(Transformer& tr, std::size_t trials, std::uint64_t seed);

/// Degeneracy, inverse bound and Lipschitz property of the noise models.
std::vector<SuiteResult> noise_suite(const BasisPtr& basis, std::size_t trials, std::uint64_t seed);

}  // namespace scbf
