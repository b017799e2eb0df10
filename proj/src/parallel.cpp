#include "scbf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "scbf/errors.hpp"

namespace scbf {

void RunningStats::add(double x) {
  ++n_;
  double d = x - mean_;
  mean_ += d / double(n_);
  m2_ += d * (x - mean_);
}

void RunningStats::merge(const RunningStats& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  double n = double(n_ + o.n_);
  double d = o.mean_ - mean_;
  mean_ += d * double(o.n_) / n;
  m2_ += o.m2_ + d * d * double(n_) * double(o.n_) / n;
  n_ += o.n_;
}

Estimate estimate(std::span<const double> samples) {
  RunningStats s;
  for (double x : samples) s.add(x);
  return {s.mean(), s.stderr_mean()};
}

Estimate weighted_estimate(std::span<const double> log_w, std::span<const double> x) {
  if (log_w.size() != x.size()) throw MismatchError("weights and samples differ in length");
  if (log_w.empty()) return {};
  double m = *std::max_element(log_w.begin(), log_w.end());
  RunningStats s;
  for (std::size_t i = 0; i < x.size(); ++i) s.add(std::exp(log_w[i] - m) * x[i]);
  double scale = std::exp(m);
  return {s.mean() * scale, s.stderr_mean() * scale};
}

double effective_sample_size(std::span<const double> log_w) {
  if (log_w.empty()) return 0.0;
  double m = *std::max_element(log_w.begin(), log_w.end());
  double s1 = 0.0, s2 = 0.0;
  for (double l : log_w) {
    double w = std::exp(l - m);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

Estimate log_mean_exp(std::span<const double> l) {
  if (l.empty()) throw InvalidArgument("log_mean_exp of an empty sample");
  double m = *std::max_element(l.begin(), l.end());
  RunningStats s;
  for (double x : l) s.add(std::exp(x - m));
  return {m + std::log(s.mean()), s.stderr_mean() / s.mean()};
}

std::size_t worker_count() {
  const char* env = std::getenv("SCBF_WORKERS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw ConfigError(std::string("SCBF_WORKERS must be a positive integer, got '") + env + "'");
  return std::size_t(std::min<long>(v, 256));
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t, std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i, w);
        } catch (...) {
          std::lock_guard lk(mu);
          if (!first) first = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::vector<std::unique_ptr<Integrator>> EnsembleConfig::make_integrators() const {
  std::vector<std::unique_ptr<Integrator>> out;
  std::size_t n = std::max<std::size_t>(1, std::min(workers, paths));
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::make_unique<Integrator>(params, noise, step, basis));
  return out;
}

HarnackConstants EnsembleConfig::constants() const {
  if (!noise) throw InvalidArgument("constants need a noise model");
  return harnack_constants(params, *noise, regime);
}

std::vector<std::uint64_t> sample_steps(std::span<const double> times, double dt) {
  std::vector<std::uint64_t> out;
  for (double t : times) {
    auto s = step_count(t, dt);
    if (!out.empty() && s < out.back()) throw InvalidArgument("sample times must be nondecreasing");
    out.push_back(s);
  }
  return out;
}

}  // namespace scbf
