#include "scbf/integrator.hpp"

#include <cmath>

#include "scbf/errors.hpp"

namespace scbf {

double energy_residual(const EnergyLedger& l, double x_norm_sq, const PhysParams& p) {
  return l.norm_h_sq + 2.0 * p.mu * l.int_v + 2.0 * p.beta * l.int_lr1 + 2.0 * p.alpha * l.int_h - x_norm_sq -
         l.int_trace - l.martingale;
}

std::uint64_t step_count(double T, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(T >= 0.0)) throw InvalidArgument("T must be nonnegative");
  double n = std::round(T / dt);
  if (std::abs(n * dt - T) > 1e-9 * std::max(T, dt))
    throw InvalidArgument("T must be an integer multiple of dt");
  return static_cast<std::uint64_t>(n);
}

Integrator::Integrator(PhysParams params, const NoiseModel* noise, StepOptions options, BasisPtr basis)
    : params_(params), noise_(noise), options_(options), basis_(std::move(basis)), tr_(basis_) {
  params_.validate();
  if (!(options_.dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (noise_ && !noise_->basis().same_as(*basis_)) throw MismatchError("noise model and integrator use different bases");
}

VelocityField Integrator::advance(const VelocityField& u, const VelocityField& nl, const VelocityField* increment,
                                  const VelocityField* drift, double h) const {
  VelocityField out = u;
  out.axpy(-h, nl);
  if (increment) out += *increment;
  if (drift) out.axpy(h, *drift);
  const auto& b = *basis_;
  const int n = b.dimension();
  for (std::size_t i = 0; i < b.size(); ++i) {
    double inv = 1.0 / (1.0 + h * (params_.mu * b.eigenvalue(i) + params_.alpha));
    for (int c = 0; c < n; ++c) out.at(i, c) *= inv;
  }
  return out;
}

std::vector<double> Integrator::brownian(const RandomKey& key, double dt) const {
  if (!noise_) return {};
  std::vector<double> dw(noise_->dofs());
  fill_normals(key, dw);
  const double s = std::sqrt(dt);
  for (double& x : dw) x *= s;
  return dw;
}

void Integrator::check_state(const VelocityField& u, std::uint64_t trajectory, std::uint64_t step) const {
  double e = norm_h_sq(u);
  if (!std::isfinite(e)) throw GuardAbort("non-finite state", trajectory, step);
  if (e > options_.abort_norm * options_.abort_norm)
    throw GuardAbort("||u||_H exceeded " + std::to_string(options_.abort_norm), trajectory, step);
}

Path::Path(Integrator& integrator, VelocityField x, std::uint64_t seed, std::uint64_t trajectory)
    : integ_(&integrator), u_(std::move(x)), seed_(seed), trajectory_(trajectory) {
  if (!u_.basis().same_as(*integ_->basis_ptr())) throw MismatchError("initial state basis does not match the integrator");
  x_norm_sq_ = norm_h_sq(u_);
  ledger_.norm_h_sq = x_norm_sq_;
}

Path::Path(Integrator& integrator, VelocityField u, EnergyLedger ledger, double x_norm_sq, std::uint64_t seed,
           std::uint64_t trajectory, std::uint64_t step)
    : integ_(&integrator),
      u_(std::move(u)),
      ledger_(ledger),
      x_norm_sq_(x_norm_sq),
      seed_(seed),
      trajectory_(trajectory),
      step_(step) {
  if (!u_.basis().same_as(*integ_->basis_ptr())) throw MismatchError("restored state basis does not match the integrator");
}

const NonlinearEval& Path::current_eval() {
  if (!cache_) cache_ = integ_->evaluate(u_);
  return *cache_;
}

double Path::energy_residual() const { return scbf::energy_residual(ledger_, x_norm_sq_, integ_->params()); }

void Path::step() {
  const double dt = integ_->options().dt;
  auto dw = integ_->brownian({seed_, trajectory_, step_, Stream::kNoise}, dt);
  substep(dw, dt, 0, 1);
  ++step_;
  ledger_.t = static_cast<double>(step_) * dt;
}

void Path::run(std::uint64_t steps) {
  for (std::uint64_t i = 0; i < steps; ++i) step();
}

void Path::substep(const std::vector<double>& dw, double h, int depth, std::uint64_t bridge_id) {
  const PhysParams& p = integ_->params();
  const NoiseModel* noise = integ_->noise();
  const NonlinearEval& ev = current_eval();
  if (h * p.beta * ev.max_damping >= 1.0) {
    if (depth == 0) ++guard_warnings_;
    if (integ_->options().split_on_guard && depth < integ_->options().max_splits) {
      // Midpoint of the Brownian path given its endpoint: dW/2 + sqrt(h/4) z.
      std::vector<double> first(dw.size()), second(dw.size());
      const RandomKey key{seed_, trajectory_, step_, Stream::kBridge};
      const double s = std::sqrt(0.25 * h);
      for (std::size_t j = 0; j < dw.size(); ++j) {
        double z = normal_at(key, static_cast<std::uint32_t>(bridge_id * dw.size() + j));
        first[j] = 0.5 * dw[j] + s * z;
        second[j] = dw[j] - first[j];
      }
      substep(first, 0.5 * h, depth + 1, 2 * bridge_id);
      substep(second, 0.5 * h, depth + 1, 2 * bridge_id + 1);
      return;
    }
  }

  std::optional<VelocityField> inc;
  if (noise) {
    double g = noise->gain(&u_);
    inc = noise->apply(dw, g);
    ledger_.martingale += 2.0 * inner(*inc, u_);
    auto coords = noise->coordinates(u_);
    double qv = 0.0;
    auto sig = noise->amplitudes();
    for (std::size_t j = 0; j < coords.size(); ++j) {
      double a = g * sig[j] * coords[j];
      qv += a * a;
    }
    ledger_.quad_var += 4.0 * qv * h;
    ledger_.int_trace += g * g * noise->trace() * h;
  }
  VelocityField next = integ_->advance(u_, ev.value, inc ? &*inc : nullptr, nullptr, h);
  integ_->check_state(next, trajectory_, step_);
  NonlinearEval ev_next = integ_->evaluate(next);

  const double vh0 = norm_v_sq(u_), vh1 = norm_v_sq(next);
  const double hh0 = norm_h_sq(u_), hh1 = norm_h_sq(next);
  ledger_.int_v += 0.5 * h * (vh0 + vh1);
  ledger_.int_lr1 += 0.5 * h * (ev.lr1_power + ev_next.lr1_power);
  ledger_.int_h += 0.5 * h * (hh0 + hh1);
  ledger_.norm_h_sq = hh1;
  u_ = std::move(next);
  cache_ = std::move(ev_next);
}

std::vector<Sample> simulate(Integrator& integrator, const VelocityField& x, double T, std::uint64_t sample_every,
                             std::uint64_t seed, std::uint64_t trajectory) {
  const std::uint64_t steps = step_count(T, integrator.options().dt);
  if (sample_every == 0) sample_every = std::max<std::uint64_t>(steps, 1);
  Path path(integrator, x, seed, trajectory);
  std::vector<Sample> out;
  out.push_back({0.0, path.state(), path.ledger()});
  for (std::uint64_t s = 1; s <= steps; ++s) {
    path.step();
    if (s % sample_every == 0 || s == steps) out.push_back({path.time(), path.state(), path.ledger()});
  }
  return out;
}

}  // namespace scbf
