#pragma once

// Divergence-free Fourier representation of velocity fields on the periodic box [0, 2pi)^n.
//
// Normalization: a field is u(x) = sum_k u_k exp(i k.x) / (2pi)^(n/2), summed over every retained
// wavevector k (both k and -k are stored). With this convention the L^2 norm of u equals the l^2
// norm of its coefficients, so ||u||_H needs no quadrature. Real fields satisfy u_{-k} = conj(u_k).
//
// Coefficient layout (also the checkpoint layout): mode-major, n complex components per mode, modes
// sorted by (|k|^2, k lexicographic). The low block [0, forced_count()) holds every mode with
// |k|^2 <= eigen_cut.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "scbf/random.hpp"

namespace scbf {

using Complex = std::complex<double>;
using Wavevector = std::array<int, 3>;
using RealVector = std::array<double, 3>;

class SpectralBasis;
using BasisPtr = std::shared_ptr<const SpectralBasis>;

class SpectralBasis {
 public:
  /// Builds the mode set |k_i| <= N/2, k != 0. `eigen_cut` selects the forced (low) block.
  /// Throws InvalidArgument for n not in {2,3}, odd or too small N, or a cut outside [1, (N/2)^2).
  static BasisPtr build(int dimension, int resolution, double eigen_cut);

  int dimension() const noexcept { return dim_; }
  int resolution() const noexcept { return resolution_; }
  /// Points per axis of the oversampled collocation grid (2N).
  int grid_points() const noexcept { return 2 * resolution_; }
  double eigen_cut() const noexcept { return eigen_cut_; }

  std::size_t size() const noexcept { return modes_.size(); }
  const Wavevector& wavevector(std::size_t i) const { return modes_[i]; }
  double eigenvalue(std::size_t i) const { return lambda_[i]; }
  /// Index of -k.
  std::size_t partner(std::size_t i) const { return partner_[i]; }
  /// True for the representative of each {k, -k} pair (first nonzero component positive).
  bool canonical(std::size_t i) const { return canonical_[i]; }

  /// Number of modes with eigenvalue <= eigen_cut (the forced block occupies indices [0, N0)).
  std::size_t forced_count() const noexcept { return forced_; }
  /// Largest eigenvalue among forced modes.
  double lambda_cut() const noexcept { return lambda_[forced_ - 1]; }
  double lambda_first() const noexcept { return lambda_.front(); }
  double lambda_max() const noexcept { return lambda_.back(); }
  bool is_low(std::size_t i) const noexcept { return i < forced_; }

  int polarizations() const noexcept { return dim_ - 1; }
  /// Real unit vector orthogonal to k; identical for k and -k so that real fields stay real.
  const RealVector& polarization(std::size_t i, int p) const { return polarization_[i * 2 + p]; }

  /// Index of wavevector k, or size() if it is not retained.
  std::size_t find(const Wavevector& k) const;

  bool same_as(const SpectralBasis& other) const noexcept {
    return dim_ == other.dim_ && resolution_ == other.resolution_ && eigen_cut_ == other.eigen_cut_;
  }

 private:
  SpectralBasis() = default;

  int dim_ = 2;
  int resolution_ = 0;
  double eigen_cut_ = 0.0;
  std::size_t forced_ = 0;
  std::vector<Wavevector> modes_;
  std::vector<double> lambda_;
  std::vector<std::size_t> partner_;
  std::vector<bool> canonical_;
  std::vector<RealVector> polarization_;
};

/// Per-mode complex vector coefficients on a basis with no solenoidal constraint (e.g. the raw
/// spectral image of a grid product before projection).
class RawField {
 public:
  RawField() = default;
  explicit RawField(BasisPtr basis);

  const SpectralBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  Complex& at(std::size_t mode, int component) { return coef_[mode * dim_ + component]; }
  const Complex& at(std::size_t mode, int component) const { return coef_[mode * dim_ + component]; }
  std::span<Complex> coefficients() { return coef_; }
  std::span<const Complex> coefficients() const { return coef_; }

 protected:
  BasisPtr basis_;
  int dim_ = 0;
  std::vector<Complex> coef_;
};

/// Divergence-free, real, mean-zero velocity state.
class VelocityField : public RawField {
 public:
  VelocityField() = default;
  explicit VelocityField(BasisPtr basis) : RawField(std::move(basis)) {}

  /// Adds a single real Fourier pair: u_k += a e/sqrt2, u_{-k} += conj(a) e/sqrt2 with e the
  /// polarization vector. On a zero field the result has ||u||_H = |a|.
  void add_mode(const Wavevector& k, int polarization, Complex amplitude);
  void add_mode_at(std::size_t index, int polarization, Complex amplitude);

  VelocityField& operator+=(const VelocityField& other);
  VelocityField& operator-=(const VelocityField& other);
  VelocityField& operator*=(double s);
  /// this += s * other
  void axpy(double s, const VelocityField& other);

  friend VelocityField operator+(VelocityField a, const VelocityField& b) { return a += b; }
  friend VelocityField operator-(VelocityField a, const VelocityField& b) { return a -= b; }
  friend VelocityField operator*(double s, VelocityField a) { return a *= s; }

  bool operator==(const VelocityField& other) const;

 private:
  friend VelocityField leray_project(const RawField& raw);
  void check_compatible(const RawField& other) const;
};

/// Projection u_k -> (I - k k^T/|k|^2) u_k on every mode.
VelocityField leray_project(const RawField& raw);

/// Low part keeps modes with lambda_k <= lambda_{N0}; high part the rest. low + high == u exactly.
std::pair<VelocityField, VelocityField> split_low_high(const VelocityField& u);
/// Zeroes the high block.
VelocityField low_part(const VelocityField& u);

/// L^2 inner product (u, v).
double inner(const RawField& u, const RawField& v);
double norm_h_sq(const RawField& u);
double norm_v_sq(const RawField& u);
double norm_h(const RawField& u);
double norm_v(const RawField& u);
/// Dual norm sup_{w in resolved band} <f, w>/||w||_V = (sum |f_k|^2 / lambda_k)^(1/2).
double norm_v_dual(const RawField& f);

/// max_k |k . u_k| / (|k| max_k |u_k|); zero for solenoidal fields.
double divergence_residual(const RawField& u);
/// max_k |u_{-k} - conj(u_k)| / max_k |u_k|.
double reality_residual(const RawField& u);

/// Gaussian test field: complex N(0,1) amplitudes on each canonical mode and polarization scaled by
/// |k|^-decay and by `scale`, conjugate-mirrored. Deterministic in (seed, id).
VelocityField random_field(const BasisPtr& basis, std::uint64_t seed, std::uint64_t id, double scale = 1.0,
                           double decay = 2.0, Stream stream = Stream::kProperty);
/// Random field restricted to the forced block.
VelocityField random_low_field(const BasisPtr& basis, std::uint64_t seed, std::uint64_t id, double scale = 1.0);

/// Real velocity samples on the M^n collocation grid, component-major.
class PhysicalField {
 public:
  PhysicalField() = default;
  explicit PhysicalField(BasisPtr basis);

  const SpectralBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  int grid_points() const noexcept { return m_; }
  std::size_t points() const noexcept { return points_; }
  std::span<double> component(int c) { return {data_.data() + c * points_, points_}; }
  std::span<const double> component(int c) const { return {data_.data() + c * points_, points_}; }

 private:
  BasisPtr basis_;
  int m_ = 0;
  std::size_t points_ = 0;
  std::vector<double> data_;
};

enum class NormKind { kH, kV, kLp };

/// FFT workspace bound to one basis. Not thread-safe; use one per worker.
class Transformer {
 public:
  explicit Transformer(BasisPtr basis);
  ~Transformer();
  Transformer(const Transformer&) = delete;
  Transformer& operator=(const Transformer&) = delete;

  const SpectralBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  std::size_t points() const noexcept { return points_; }
  /// Quadrature weight (2pi/M)^n.
  double cell_volume() const noexcept { return cell_volume_; }

  PhysicalField to_physical(const RawField& u);
  /// Truncation of the grid data to the resolved band, without projection.
  RawField to_spectral_raw(const PhysicalField& f);
  /// Truncation followed by Leray projection.
  VelocityField to_spectral(const PhysicalField& f);

  /// ||u||_{L^p} by grid quadrature (p >= 1), or the spectral H / V norms.
  double norm(const RawField& u, NormKind kind, double p = 2.0);
  double norm_lp(const RawField& u, double p);

  // Scalar kernels used by the operator module. `per_mode` has one entry per basis mode.
  double* grid_buffer(int slot);
  void scalar_to_grid(std::span<const Complex> per_mode, double* grid);
  void grid_to_scalar(const double* grid, std::span<Complex> per_mode);

 private:
  void check_basis(const SpectralBasis& b) const;

  BasisPtr basis_;
  int dim_;
  int m_;
  std::size_t points_;
  std::size_t half_points_;
  double cell_volume_;
  double inverse_scale_;
  double forward_scale_;
  std::vector<std::size_t> half_index_;  // location of k (or -k when k_last < 0) in the half-complex array
  std::vector<bool> stored_direct_;      // k_last >= 0
  void* plan_forward_ = nullptr;
  void* plan_inverse_ = nullptr;
  Complex* half_ = nullptr;
  std::vector<double*> grids_;
  std::vector<Complex> scratch_;
};

}  // namespace scbf
