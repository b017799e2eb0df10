#include "scbf/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "scbf/errors.hpp"

namespace scbf {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

double two_pi_pow(int n, double e) { return std::pow(2.0 * std::numbers::pi, n * e); }

bool first_nonzero_positive(const Wavevector& k, int dim) {
  for (int c = 0; c < dim; ++c) {
    if (k[c] != 0) return k[c] > 0;
  }
  return false;
}

RealVector normalized(RealVector v) {
  double s = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (double& x : v) x /= s;
  return v;
}

RealVector cross(const RealVector& a, const RealVector& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace

BasisPtr SpectralBasis::build(int dimension, int resolution, double eigen_cut) {
  if (dimension != 2 && dimension != 3) throw InvalidArgument("dimension must be 2 or 3, got " + std::to_string(dimension));
  if (resolution < 4 || resolution % 2 != 0)
    throw InvalidArgument("resolution must be even and at least 4, got " + std::to_string(resolution));
  double band = static_cast<double>(resolution / 2) * (resolution / 2);
  if (!(eigen_cut >= 1.0)) throw InvalidArgument("eigen_cut must be at least 1 (no forced modes otherwise)");
  if (eigen_cut >= band)
    throw InvalidArgument("eigen_cut " + std::to_string(eigen_cut) + " is outside the resolved band (must be < " +
                          std::to_string(band) + ")");

  auto b = std::shared_ptr<SpectralBasis>(new SpectralBasis());
  b->dim_ = dimension;
  b->resolution_ = resolution;
  b->eigen_cut_ = eigen_cut;

  const int h = resolution / 2;
  const int zmax = dimension == 3 ? h : 0;
  for (int i = -h; i <= h; ++i)
    for (int j = -h; j <= h; ++j)
      for (int l = -zmax; l <= zmax; ++l) {
        if (i == 0 && j == 0 && l == 0) continue;
        b->modes_.push_back({i, j, l});
      }
  std::sort(b->modes_.begin(), b->modes_.end(), [](const Wavevector& a, const Wavevector& c) {
    int la = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    int lc = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
    if (la != lc) return la < lc;
    return a < c;
  });

  const std::size_t n = b->modes_.size();
  b->lambda_.resize(n);
  b->partner_.resize(n);
  b->canonical_.resize(n);
  b->polarization_.assign(n * 2, RealVector{0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& k = b->modes_[i];
    b->lambda_[i] = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (b->lambda_[i] <= eigen_cut) b->forced_ = i + 1;
    b->canonical_[i] = first_nonzero_positive(k, dimension);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& k = b->modes_[i];
    b->partner_[i] = b->find({-k[0], -k[1], -k[2]});
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!b->canonical_[i]) continue;
    const auto& k = b->modes_[i];
    RealVector kv{double(k[0]), double(k[1]), double(k[2])};
    RealVector e0, e1{0.0, 0.0, 0.0};
    if (dimension == 2) {
      e0 = normalized({-kv[1], kv[0], 0.0});
    } else {
      // Cross with the axis least aligned with k.
      int axis = 0;
      for (int c = 1; c < 3; ++c)
        if (std::abs(kv[c]) < std::abs(kv[axis])) axis = c;
      RealVector a{0.0, 0.0, 0.0};
      a[axis] = 1.0;
      e0 = normalized(cross(kv, a));
      e1 = normalized(cross(kv, e0));
    }
    for (std::size_t idx : {i, b->partner_[i]}) {
      b->polarization_[idx * 2] = e0;
      b->polarization_[idx * 2 + 1] = e1;
    }
  }
  return b;
}

std::size_t SpectralBasis::find(const Wavevector& k) const {
  int l = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
  auto it = std::lower_bound(modes_.begin(), modes_.end(), k, [](const Wavevector& a, const Wavevector& c) {
    int la = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    int lc = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
    if (la != lc) return la < lc;
    return a < c;
  });
  if (it == modes_.end() || *it != k || l == 0) return modes_.size();
  return static_cast<std::size_t>(it - modes_.begin());
}

RawField::RawField(BasisPtr basis) : basis_(std::move(basis)) {
  if (!basis_) throw InvalidArgument("field requires a basis");
  dim_ = basis_->dimension();
  coef_.assign(basis_->size() * dim_, Complex{});
}

void VelocityField::check_compatible(const RawField& other) const {
  if (!basis_ || !other.basis_ptr() || !(basis_ == other.basis_ptr() || basis_->same_as(other.basis())))
    throw MismatchError("fields are defined on different bases");
}

void VelocityField::add_mode_at(std::size_t i, int p, Complex a) {
  if (i >= basis_->size()) throw InvalidArgument("mode index out of range");
  if (p < 0 || p >= basis_->polarizations()) throw InvalidArgument("polarization out of range");
  const std::size_t j = basis_->partner(i);
  const RealVector& e = basis_->polarization(i, p);
  const Complex c = a / std::numbers::sqrt2;
  for (int d = 0; d < dim_; ++d) {
    at(i, d) += c * e[d];
    at(j, d) += std::conj(c) * e[d];
  }
}

void VelocityField::add_mode(const Wavevector& k, int p, Complex a) {
  std::size_t i = basis_->find(k);
  if (i == basis_->size()) throw InvalidArgument("wavevector is not in the resolved band");
  add_mode_at(i, p, a);
}

VelocityField& VelocityField::operator+=(const VelocityField& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += other.coef_[i];
  return *this;
}

VelocityField& VelocityField::operator-=(const VelocityField& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] -= other.coef_[i];
  return *this;
}

VelocityField& VelocityField::operator*=(double s) {
  for (auto& c : coef_) c *= s;
  return *this;
}

void VelocityField::axpy(double s, const VelocityField& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < coef_.size(); ++i) coef_[i] += s * other.coef_[i];
}

bool VelocityField::operator==(const VelocityField& other) const {
  if (!basis_ || !other.basis_) return basis_ == other.basis_;
  return basis_->same_as(*other.basis_) && coef_ == other.coef_;
}

VelocityField leray_project(const RawField& raw) {
  VelocityField out(raw.basis_ptr());
  const auto& b = raw.basis();
  const int n = b.dimension();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& k = b.wavevector(i);
    Complex dot{};
    for (int c = 0; c < n; ++c) dot += double(k[c]) * raw.at(i, c);
    dot /= b.eigenvalue(i);
    for (int c = 0; c < n; ++c) out.at(i, c) = raw.at(i, c) - double(k[c]) * dot;
  }
  return out;
}

std::pair<VelocityField, VelocityField> split_low_high(const VelocityField& u) {
  VelocityField low(u.basis_ptr()), high(u.basis_ptr());
  const auto& b = u.basis();
  const int n = b.dimension();
  const std::size_t cut = b.forced_count() * n;
  auto src = u.coefficients();
  std::copy(src.begin(), src.begin() + cut, low.coefficients().begin());
  std::copy(src.begin() + cut, src.end(), high.coefficients().begin() + cut);
  return {std::move(low), std::move(high)};
}

VelocityField low_part(const VelocityField& u) {
  VelocityField low(u.basis_ptr());
  const std::size_t cut = u.basis().forced_count() * u.basis().dimension();
  auto src = u.coefficients();
  std::copy(src.begin(), src.begin() + cut, low.coefficients().begin());
  return low;
}

double inner(const RawField& u, const RawField& v) {
  if (!u.basis().same_as(v.basis())) throw MismatchError("inner product of fields on different bases");
  auto a = u.coefficients();
  auto b = v.coefficients();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s;
}

double norm_h_sq(const RawField& u) {
  double s = 0.0;
  for (const auto& c : u.coefficients()) s += std::norm(c);
  return s;
}

double norm_v_sq(const RawField& u) {
  const auto& b = u.basis();
  const int n = b.dimension();
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double m = 0.0;
    for (int c = 0; c < n; ++c) m += std::norm(u.at(i, c));
    s += b.eigenvalue(i) * m;
  }
  return s;
}

double norm_h(const RawField& u) { return std::sqrt(norm_h_sq(u)); }
double norm_v(const RawField& u) { return std::sqrt(norm_v_sq(u)); }

double norm_v_dual(const RawField& f) {
  const auto& b = f.basis();
  const int n = b.dimension();
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double m = 0.0;
    for (int c = 0; c < n; ++c) m += std::norm(f.at(i, c));
    s += m / b.eigenvalue(i);
  }
  return std::sqrt(s);
}

double divergence_residual(const RawField& u) {
  const auto& b = u.basis();
  const int n = b.dimension();
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& k = b.wavevector(i);
    Complex dot{};
    double mag = 0.0;
    for (int c = 0; c < n; ++c) {
      dot += double(k[c]) * u.at(i, c);
      mag += std::norm(u.at(i, c));
    }
    worst = std::max(worst, std::abs(dot) / std::sqrt(b.eigenvalue(i)));
    scale = std::max(scale, std::sqrt(mag));
  }
  return scale == 0.0 ? 0.0 : worst / scale;
}

double reality_residual(const RawField& u) {
  const auto& b = u.basis();
  const int n = b.dimension();
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::size_t j = b.partner(i);
    for (int c = 0; c < n; ++c) {
      worst = std::max(worst, std::abs(u.at(j, c) - std::conj(u.at(i, c))));
      scale = std::max(scale, std::abs(u.at(i, c)));
    }
  }
  return scale == 0.0 ? 0.0 : worst / scale;
}

namespace {

VelocityField gaussian_field(const BasisPtr& basis, std::uint64_t seed, std::uint64_t id, double scale, double decay,
                             Stream stream, std::size_t mode_limit) {
  VelocityField u(basis);
  const int pols = basis->polarizations();
  std::vector<double> xi(2 * pols * mode_limit);
  fill_normals(RandomKey{seed, id, 0, stream}, xi);
  std::size_t j = 0;
  for (std::size_t i = 0; i < mode_limit; ++i) {
    if (!basis->canonical(i)) continue;
    double w = scale * std::pow(basis->eigenvalue(i), -0.5 * decay);
    for (int p = 0; p < pols; ++p) {
      Complex a{xi[j], xi[j + 1]};
      j += 2;
      u.add_mode_at(i, p, w * a / std::numbers::sqrt2);
    }
  }
  return u;
}

}  // namespace

VelocityField random_field(const BasisPtr& basis, std::uint64_t seed, std::uint64_t id, double scale, double decay,
                           Stream stream) {
  return gaussian_field(basis, seed, id, scale, decay, stream, basis->size());
}

VelocityField random_low_field(const BasisPtr& basis, std::uint64_t seed, std::uint64_t id, double scale) {
  return gaussian_field(basis, seed, id, scale, 0.0, Stream::kProperty, basis->forced_count());
}

PhysicalField::PhysicalField(BasisPtr basis) : basis_(std::move(basis)) {
  if (!basis_) throw InvalidArgument("field requires a basis");
  m_ = basis_->grid_points();
  points_ = 1;
  for (int c = 0; c < basis_->dimension(); ++c) points_ *= static_cast<std::size_t>(m_);
  data_.assign(points_ * basis_->dimension(), 0.0);
}

Transformer::Transformer(BasisPtr basis) : basis_(std::move(basis)) {
  if (!basis_) throw InvalidArgument("transformer requires a basis");
  dim_ = basis_->dimension();
  m_ = basis_->grid_points();
  points_ = 1;
  for (int c = 0; c < dim_; ++c) points_ *= static_cast<std::size_t>(m_);
  half_points_ = points_ / m_ * (m_ / 2 + 1);
  cell_volume_ = std::pow(2.0 * std::numbers::pi / m_, dim_);
  inverse_scale_ = two_pi_pow(dim_, -0.5);
  forward_scale_ = two_pi_pow(dim_, 0.5) / static_cast<double>(points_);

  const std::size_t nm = basis_->size();
  half_index_.resize(nm);
  stored_direct_.resize(nm);
  const std::size_t last = m_ / 2 + 1;
  for (std::size_t i = 0; i < nm; ++i) {
    Wavevector k = basis_->wavevector(i);
    bool direct = k[dim_ - 1] >= 0;
    if (!direct)
      for (int c = 0; c < dim_; ++c) k[c] = -k[c];
    std::size_t idx = 0;
    for (int c = 0; c < dim_ - 1; ++c) idx = idx * m_ + static_cast<std::size_t>((k[c] % m_ + m_) % m_);
    idx = idx * last + static_cast<std::size_t>(k[dim_ - 1]);
    half_index_[i] = idx;
    stored_direct_[i] = direct;
  }
  scratch_.resize(nm);

  half_ = reinterpret_cast<Complex*>(fftw_malloc(sizeof(fftw_complex) * half_points_));
  double* grid = grid_buffer(0);
  int dims[3] = {m_, m_, m_};
  std::lock_guard<std::mutex> lock(planner_mutex());
  plan_forward_ = fftw_plan_dft_r2c(dim_, dims, grid, reinterpret_cast<fftw_complex*>(half_), FFTW_ESTIMATE);
  plan_inverse_ = fftw_plan_dft_c2r(dim_, dims, reinterpret_cast<fftw_complex*>(half_), grid, FFTW_ESTIMATE);
  if (!plan_forward_ || !plan_inverse_) throw Error("FFT planning failed");
}

Transformer::~Transformer() {
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plan_forward_) fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    if (plan_inverse_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
  }
  for (double* g : grids_) fftw_free(g);
  fftw_free(half_);
}

double* Transformer::grid_buffer(int slot) {
  if (slot < 0) throw InvalidArgument("negative grid slot");
  while (static_cast<int>(grids_.size()) <= slot)
    grids_.push_back(static_cast<double*>(fftw_malloc(sizeof(double) * points_)));
  return grids_[slot];
}

void Transformer::check_basis(const SpectralBasis& b) const {
  if (&b != basis_.get() && !b.same_as(*basis_)) throw MismatchError("field basis does not match the transform grid");
}

void Transformer::scalar_to_grid(std::span<const Complex> per_mode, double* grid) {
  std::fill(half_, half_ + half_points_, Complex{});
  for (std::size_t i = 0; i < per_mode.size(); ++i)
    if (stored_direct_[i]) half_[half_index_[i]] = per_mode[i] * inverse_scale_;
  auto* in = reinterpret_cast<fftw_complex*>(half_);
  if (fftw_alignment_of(grid) == fftw_alignment_of(grids_[0])) {
    fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inverse_), in, grid);
  } else {
    fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inverse_), in, grids_[0]);
    std::copy(grids_[0], grids_[0] + points_, grid);
  }
}

void Transformer::grid_to_scalar(const double* grid, std::span<Complex> per_mode) {
  auto* out = reinterpret_cast<fftw_complex*>(half_);
  // r2c leaves its input intact, so the cast is safe.
  double* g = const_cast<double*>(grid);
  if (fftw_alignment_of(g) != fftw_alignment_of(grids_[0])) {
    std::copy(grid, grid + points_, grids_[0]);
    g = grids_[0];
  }
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_forward_), g, out);
  for (std::size_t i = 0; i < per_mode.size(); ++i) {
    Complex c = half_[half_index_[i]] * forward_scale_;
    per_mode[i] = stored_direct_[i] ? c : std::conj(c);
  }
}

PhysicalField Transformer::to_physical(const RawField& u) {
  check_basis(u.basis());
  PhysicalField f(basis_);
  const std::size_t nm = basis_->size();
  for (int c = 0; c < dim_; ++c) {
    for (std::size_t i = 0; i < nm; ++i) scratch_[i] = u.at(i, c);
    scalar_to_grid(scratch_, f.component(c).data());
  }
  return f;
}

RawField Transformer::to_spectral_raw(const PhysicalField& f) {
  check_basis(f.basis());
  if (f.grid_points() != m_) throw MismatchError("grid size does not match the transform");
  RawField u(basis_);
  const std::size_t nm = basis_->size();
  for (int c = 0; c < dim_; ++c) {
    grid_to_scalar(f.component(c).data(), scratch_);
    for (std::size_t i = 0; i < nm; ++i) u.at(i, c) = scratch_[i];
  }
  return u;
}

VelocityField Transformer::to_spectral(const PhysicalField& f) { return leray_project(to_spectral_raw(f)); }

double Transformer::norm_lp(const RawField& u, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("L^p norm requires p >= 1");
  PhysicalField f = to_physical(u);
  double s = 0.0;
  for (std::size_t j = 0; j < points_; ++j) {
    double m2 = 0.0;
    for (int c = 0; c < dim_; ++c) {
      double x = f.component(c)[j];
      m2 += x * x;
    }
    s += p == 2.0 ? m2 : std::pow(m2, 0.5 * p);
  }
  return std::pow(s * cell_volume_, 1.0 / p);
}

double Transformer::norm(const RawField& u, NormKind kind, double p) {
  switch (kind) {
    case NormKind::kH:
      return norm_h(u);
    case NormKind::kV:
      return norm_v(u);
    case NormKind::kLp:
      return norm_lp(u, p);
  }
  return 0.0;
}

}  // namespace scbf
