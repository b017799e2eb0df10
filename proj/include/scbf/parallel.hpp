#pragma once

// Ensemble plumbing: worker pool with results collected by index, and moment accumulators.
// Reductions always run in trajectory order after the parallel phase, so the worker count
// never changes a single emitted bit.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "scbf/integrator.hpp"
#include "scbf/noise.hpp"
#include "scbf/operators.hpp"
#include "scbf/spectral.hpp"

namespace scbf {

/// Welford accumulator.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance (0 for fewer than two samples).
  double variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }
  double stderr_mean() const { return n_ > 1 ? std::sqrt(variance() / double(n_)) : 0.0; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Estimate {
  double mean = 0.0;
  double stderr = 0.0;
};

Estimate estimate(std::span<const double> samples);
/// Mean of exp(log_w_i) x_i without overflow, with its standard error.
Estimate weighted_estimate(std::span<const double> log_w, std::span<const double> x);
/// Kish effective sample size of the weights exp(log_w).
double effective_sample_size(std::span<const double> log_w);
/// log(mean exp(l_i)) by max shift, with a delta-method standard error.
Estimate log_mean_exp(std::span<const double> l);

/// Worker count from SCBF_WORKERS (default 1, clamped to [1, 256]).
std::size_t worker_count();

/// Calls fn(index, worker) for index in [0, count) on `workers` threads.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t, std::size_t)>& fn);

template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, std::size_t workers, Fn&& fn) {
  std::vector<std::optional<T>> slots(count);
  parallel_for(count, workers, [&](std::size_t i, std::size_t w) { slots[i].emplace(fn(i, w)); });
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Everything needed to spin up independent trajectories.
struct EnsembleConfig {
  BasisPtr basis;
  PhysParams params;
  const NoiseModel* noise = nullptr;
  StepOptions step;
  Regime regime = Regime::kAdditiveSupercritical;
  std::uint64_t seed = 1;
  std::size_t paths = 100;
  std::size_t workers = 1;

  /// One integrator per worker.
  std::vector<std::unique_ptr<Integrator>> make_integrators() const;
  HarnackConstants constants() const;
};

/// Step index of each requested time; every time must be a multiple of dt.
std::vector<std::uint64_t> sample_steps(std::span<const double> times, double dt);

}  // namespace scbf
