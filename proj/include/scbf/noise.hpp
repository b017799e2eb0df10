#pragma once

// Degenerate Gaussian forcing on the low block of the basis.
//
// Each canonical forced mode k and polarization e contributes two real degrees of freedom with
// unit-norm directions
//   phi_c = sqrt2 cos(k.x) e / (2pi)^(n/2),   phi_s = sqrt2 sin(k.x) e / (2pi)^(n/2),
// and sigma is diagonal in this basis with one amplitude per degree of freedom, so
// Tr(sigma sigma*) = sum_j sigma_j^2. For n = 2 the number of degrees of freedom equals the number
// of forced modes (k and -k are counted separately).
//
// The multiplicative family is sigma(u) = g(||u||_H) sigma with g(s) = q0 + q1 tanh(s).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scbf/random.hpp"
#include "scbf/spectral.hpp"

namespace scbf {

enum class NoiseKind { kAdditive, kMultiplicative };

struct NoiseDof {
  std::size_t mode;  // canonical mode index
  int polarization;
  bool sine;
};

struct NoiseIncrement {
  double dt = 0.0;
  double gain = 1.0;
  std::vector<double> xi;  // standard normal draw per degree of freedom
  VelocityField field;     // sigma(u) dW, supported on the forced block
};

class NoiseModel {
 public:
  /// Uniform amplitude on every forced degree of freedom.
  static NoiseModel additive(BasisPtr basis, double amplitude);
  /// One amplitude per degree of freedom, in dof order.
  static NoiseModel additive(BasisPtr basis, std::vector<double> amplitudes);
  static NoiseModel multiplicative(BasisPtr basis, std::vector<double> amplitudes, double q0, double q1);
  static NoiseModel multiplicative(BasisPtr basis, double amplitude, double q0, double q1);
  /// Number of real degrees of freedom for a basis.
  static std::size_t dof_count(const SpectralBasis& basis);

  NoiseKind kind() const noexcept { return kind_; }
  bool is_multiplicative() const noexcept { return kind_ == NoiseKind::kMultiplicative; }
  const SpectralBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }

  std::size_t dofs() const noexcept { return dofs_.size(); }
  const NoiseDof& dof(std::size_t j) const { return dofs_[j]; }
  std::span<const double> amplitudes() const { return sigma_; }
  double q0() const noexcept { return q0_; }
  double q1() const noexcept { return q1_; }

  /// Tr(sigma sigma*) of the base amplitudes.
  double trace() const noexcept { return trace_; }
  /// 1 / min sigma_j.
  double c_sigma() const noexcept { return 1.0 / min_sigma_; }
  /// Squared Lipschitz constant q1^2 Tr (zero for additive noise).
  double lipschitz_sq() const noexcept { return kind_ == NoiseKind::kAdditive ? 0.0 : q1_ * q1_ * trace_; }
  /// Uniform bound on the pseudo-inverse: 1/(q0 min sigma).
  double k_tilde() const noexcept { return 1.0 / (q0_ * min_sigma_); }
  /// sup_u ||sigma(u)|| operator norm bound.
  double sup_norm() const noexcept { return (kind_ == NoiseKind::kAdditive ? 1.0 : q0_ + q1_) * max_sigma_; }

  /// Scalar gain g(||u||_H); 1 for additive noise.
  double gain(const VelocityField* u) const;
  double gain_at_norm(double norm) const;
  /// Tr(sigma(u) sigma(u)*) = g^2 Tr.
  double trace_at(const VelocityField* u) const;

  /// Coordinates (w, phi_j) of a field on the noise directions.
  std::vector<double> coordinates(const VelocityField& w) const;
  /// sum_j c_j phi_j.
  VelocityField synthesize(std::span<const double> coords) const;
  /// sum_j gain sigma_j c_j phi_j.
  VelocityField apply(std::span<const double> coords, double gain) const;
  /// sigma(u) applied to a field (only its forced-block coordinates matter).
  VelocityField apply_to(const VelocityField& w, const VelocityField* u) const;

  /// Coordinates of sigma(u)^{-1} w for w on the forced block. Throws if w carries high modes.
  std::vector<double> inverse_coordinates(const VelocityField& w_low, const VelocityField* u) const;
  VelocityField inverse_on_low(const VelocityField& w_low, const VelocityField* u) const;

  /// Draws sigma(u) dW. Requires `u` for the multiplicative model.
  NoiseIncrement sample_increment(const VelocityField* u, double dt, const RandomKey& key) const;
  /// Increment from given standard normal draws (used for Brownian-bridge refinement).
  NoiseIncrement increment_from(const VelocityField* u, double dt, std::vector<double> xi) const;

  /// Squared Hilbert-Schmidt distance ||sigma(u1) - sigma(u2)||_HS^2.
  double hs_distance_sq(const VelocityField& u1, const VelocityField& u2) const;

 private:
  NoiseModel() = default;
  void finish();

  NoiseKind kind_ = NoiseKind::kAdditive;
  BasisPtr basis_;
  std::vector<NoiseDof> dofs_;
  std::vector<double> sigma_;
  double q0_ = 1.0;
  double q1_ = 0.0;
  double trace_ = 0.0;
  double min_sigma_ = 0.0;
  double max_sigma_ = 0.0;
};

}  // namespace scbf
