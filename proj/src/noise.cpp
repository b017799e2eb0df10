#include "scbf/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "scbf/errors.hpp"

namespace scbf {

std::size_t NoiseModel::dof_count(const SpectralBasis& basis) {
  std::size_t canon = 0;
  for (std::size_t i = 0; i < basis.forced_count(); ++i) canon += basis.canonical(i) ? 1 : 0;
  return canon * basis.polarizations() * 2;
}

NoiseModel NoiseModel::additive(BasisPtr basis, double amplitude) {
  if (!basis) throw InvalidArgument("noise model requires a basis");
  std::size_t n = dof_count(*basis);
  return additive(std::move(basis), std::vector<double>(n, amplitude));
}

NoiseModel NoiseModel::additive(BasisPtr basis, std::vector<double> amplitudes) {
  if (!basis) throw InvalidArgument("noise model requires a basis");
  NoiseModel m;
  m.basis_ = std::move(basis);
  m.sigma_ = std::move(amplitudes);
  m.finish();
  return m;
}

NoiseModel NoiseModel::multiplicative(BasisPtr basis, std::vector<double> amplitudes, double q0, double q1) {
  if (!(q0 > 0.0)) throw InvalidArgument("multiplicative noise requires q0 > 0 (pseudo-inverse unbounded otherwise)");
  if (!(q1 >= 0.0)) throw InvalidArgument("multiplicative noise requires q1 >= 0");
  NoiseModel m = additive(std::move(basis), std::move(amplitudes));
  m.kind_ = NoiseKind::kMultiplicative;
  m.q0_ = q0;
  m.q1_ = q1;
  return m;
}

NoiseModel NoiseModel::multiplicative(BasisPtr basis, double amplitude, double q0, double q1) {
  if (!basis) throw InvalidArgument("noise model requires a basis");
  std::size_t n = dof_count(*basis);
  return multiplicative(std::move(basis), std::vector<double>(n, amplitude), q0, q1);
}

void NoiseModel::finish() {
  const auto& b = *basis_;
  for (std::size_t i = 0; i < b.forced_count(); ++i) {
    if (!b.canonical(i)) continue;
    for (int p = 0; p < b.polarizations(); ++p) {
      dofs_.push_back({i, p, false});
      dofs_.push_back({i, p, true});
    }
  }
  if (dofs_.empty()) throw InvalidArgument("noise model has no forced degrees of freedom");
  if (sigma_.size() != dofs_.size())
    throw InvalidArgument("expected " + std::to_string(dofs_.size()) + " noise amplitudes (one per forced real degree of freedom), got " +
                          std::to_string(sigma_.size()));
  trace_ = 0.0;
  min_sigma_ = sigma_.front();
  max_sigma_ = sigma_.front();
  for (double s : sigma_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("noise amplitudes must be positive and finite");
    trace_ += s * s;
    min_sigma_ = std::min(min_sigma_, s);
    max_sigma_ = std::max(max_sigma_, s);
  }
}

double NoiseModel::gain_at_norm(double norm) const {
  if (kind_ == NoiseKind::kAdditive) return 1.0;
  return q0_ + q1_ * std::tanh(norm);
}

double NoiseModel::gain(const VelocityField* u) const {
  if (kind_ == NoiseKind::kAdditive) return 1.0;
  if (!u) throw InvalidArgument("multiplicative noise requires the current state");
  return gain_at_norm(norm_h(*u));
}

double NoiseModel::trace_at(const VelocityField* u) const {
  double g = gain(u);
  return g * g * trace_;
}

std::vector<double> NoiseModel::coordinates(const VelocityField& w) const {
  std::vector<double> c(dofs_.size());
  const int n = basis_->dimension();
  for (std::size_t j = 0; j < dofs_.size(); ++j) {
    const auto& d = dofs_[j];
    const RealVector& e = basis_->polarization(d.mode, d.polarization);
    Complex proj{};
    for (int k = 0; k < n; ++k) proj += w.at(d.mode, k) * e[k];
    c[j] = d.sine ? -std::numbers::sqrt2 * proj.imag() : std::numbers::sqrt2 * proj.real();
  }
  return c;
}

VelocityField NoiseModel::synthesize(std::span<const double> coords) const {
  if (coords.size() != dofs_.size()) throw MismatchError("coordinate vector does not match the noise dimension");
  VelocityField out(basis_);
  for (std::size_t j = 0; j < dofs_.size(); j += 2) {
    const auto& d = dofs_[j];
    out.add_mode_at(d.mode, d.polarization, Complex{coords[j], -coords[j + 1]});
  }
  return out;
}

VelocityField NoiseModel::apply(std::span<const double> coords, double gain) const {
  if (coords.size() != dofs_.size()) throw MismatchError("coordinate vector does not match the noise dimension");
  VelocityField out(basis_);
  // cos and sin dofs of one (mode, polarization) are adjacent.
  for (std::size_t j = 0; j < dofs_.size(); j += 2) {
    const auto& d = dofs_[j];
    double sc = gain * sigma_[j] * coords[j];
    double ss = gain * sigma_[j + 1] * coords[j + 1];
    out.add_mode_at(d.mode, d.polarization, Complex{sc, -ss});
  }
  return out;
}

VelocityField NoiseModel::apply_to(const VelocityField& w, const VelocityField* u) const {
  return apply(coordinates(w), gain(u));
}

std::vector<double> NoiseModel::inverse_coordinates(const VelocityField& w_low, const VelocityField* u) const {
  const auto& b = *basis_;
  auto coef = w_low.coefficients();
  for (std::size_t i = b.forced_count() * b.dimension(); i < coef.size(); ++i)
    if (coef[i] != Complex{}) throw InvalidArgument("inverse_on_low: field carries energy outside the forced block");
  double g = gain(u);
  std::vector<double> c = coordinates(w_low);
  for (std::size_t j = 0; j < c.size(); ++j) c[j] /= g * sigma_[j];
  return c;
}

VelocityField NoiseModel::inverse_on_low(const VelocityField& w_low, const VelocityField* u) const {
  return synthesize(inverse_coordinates(w_low, u));
}

NoiseIncrement NoiseModel::increment_from(const VelocityField* u, double dt, std::vector<double> xi) const {
  if (!(dt >= 0.0)) throw InvalidArgument("time step must be nonnegative");
  if (xi.size() != dofs_.size()) throw MismatchError("draw count does not match the noise dimension");
  NoiseIncrement inc;
  inc.dt = dt;
  inc.gain = gain(u);
  inc.xi = std::move(xi);
  double s = std::sqrt(dt);
  std::vector<double> dw(inc.xi.size());
  for (std::size_t j = 0; j < dw.size(); ++j) dw[j] = s * inc.xi[j];
  inc.field = apply(dw, inc.gain);
  return inc;
}

NoiseIncrement NoiseModel::sample_increment(const VelocityField* u, double dt, const RandomKey& key) const {
  if (kind_ == NoiseKind::kMultiplicative && !u) throw InvalidArgument("multiplicative noise requires the current state");
  std::vector<double> xi(dofs_.size());
  fill_normals(key, xi);
  return increment_from(u, dt, std::move(xi));
}

double NoiseModel::hs_distance_sq(const VelocityField& u1, const VelocityField& u2) const {
  double dg = gain(&u1) - gain(&u2);
  return dg * dg * trace_;
}

}  // namespace scbf
