#include <gtest/gtest.h>

#include <cmath>

#include "scbf/errors.hpp"
#include "scbf/integrator.hpp"

using namespace scbf;

namespace {

struct IntegratorTest : ::testing::Test {
  BasisPtr basis = SpectralBasis::build(2, 16, 4.5);
  NoiseModel noise = NoiseModel::additive(basis, std::sqrt(0.01 / 12.0));
};

}  // namespace

TEST_F(IntegratorTest, SingleModeLinearDecay) {
  PhysParams p{1.0, 0.0, 5.0, 0.0};
  // beta = 0 is outside validate(); use a tiny beta with a field small enough that C is invisible.
  p.beta = 1e-300;
  Integrator integ(p, nullptr, {1e-2}, basis);
  VelocityField x(basis);
  x.add_mode({1, 0, 0}, 0, 0.3);
  Path path(integ, x, 1, 0);
  path.step();
  VelocityField expect(basis);
  expect.add_mode({1, 0, 0}, 0, 0.3 / 1.01);
  EXPECT_LT(norm_h(path.state() - expect), 1e-15);
}

TEST_F(IntegratorTest, NoiseFreeEnergyDecreases) {
  PhysParams p;
  Integrator integ(p, nullptr, {1e-3}, basis);
  auto x = random_field(basis, 7, 0, 0.5);
  Path path(integ, x, 1, 0);
  double prev = norm_h_sq(x);
  for (int s = 0; s < 200; ++s) {
    path.step();
    double e = norm_h_sq(path.state());
    EXPECT_LE(e, prev * (1 + 1e-6));
    prev = e;
  }
  EXPECT_LT(divergence_residual(path.state()), 1e-12);
}

TEST_F(IntegratorTest, ZeroStateGetsFilteredIncrement) {
  PhysParams p;
  const double dt = 1e-2;
  Integrator integ(p, &noise, {dt}, basis);
  Path path(integ, VelocityField(basis), 3, 5);
  path.step();
  auto inc = noise.sample_increment(nullptr, dt, {3, 5, 0, Stream::kNoise});
  VelocityField expect = inc.field;
  for (std::size_t i = 0; i < basis->size(); ++i)
    for (int c = 0; c < 2; ++c) expect.at(i, c) /= 1.0 + dt * basis->eigenvalue(i);
  EXPECT_LT(norm_h(path.state() - expect), 1e-15);
  auto [lo, hi] = split_low_high(path.state());
  EXPECT_EQ(norm_h(hi), 0.0);
}

TEST_F(IntegratorTest, Deterministic) {
  Integrator integ(PhysParams{}, &noise, {1e-3}, basis);
  auto x = random_field(basis, 8, 0, 0.3);
  auto a = simulate(integ, x, 0.1, 10, 42, 3);
  auto b = simulate(integ, x, 0.1, 10, 42, 3);
  ASSERT_EQ(a.size(), 11u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].u == b[i].u);
    EXPECT_EQ(a[i].ledger, b[i].ledger);
  }
  auto c = simulate(integ, x, 0.1, 10, 42, 4);
  EXPECT_FALSE(a.back().u == c.back().u);
}

TEST_F(IntegratorTest, ZeroHorizon) {
  Integrator integ(PhysParams{}, &noise, {1e-3}, basis);
  auto x = random_field(basis, 9, 0, 0.3);
  auto tr = simulate(integ, x, 0.0, 1, 1, 0);
  ASSERT_EQ(tr.size(), 1u);
  EXPECT_TRUE(tr[0].u == x);
  EXPECT_EQ(energy_residual(tr[0].ledger, norm_h_sq(x), integ.params()), 0.0);
  EXPECT_THROW(step_count(0.15, 0.1), InvalidArgument);
  EXPECT_EQ(step_count(1.0, 1e-3), 1000u);
}

TEST_F(IntegratorTest, QuadraticVariationBound) {
  Integrator integ(PhysParams{}, &noise, {1e-3}, basis);
  for (std::uint64_t traj = 0; traj < 10; ++traj) {
    Path path(integ, random_field(basis, 10, traj, 0.3), 11, traj);
    path.run(300);
    const auto& l = path.ledger();
    // Left-point sums against a trapezoid integral: allow the O(dt) mismatch.
    double bound = 4.0 / basis->lambda_first() * noise.trace() * l.int_v;
    EXPECT_LE(l.quad_var, bound * (1 + 1e-2));
    EXPECT_GT(l.quad_var, 0.0);
  }
}

TEST_F(IntegratorTest, ResidualIsFirstOrderWithoutNoise) {
  // Noise-free: residual is pure quadrature and scheme error.
  auto x = random_field(basis, 12, 0, 1.0);
  double res[3];
  double dt = 2e-3;
  for (int lvl = 0; lvl < 3; ++lvl, dt /= 2) {
    Integrator integ(PhysParams{}, nullptr, {dt}, basis);
    Path path(integ, x, 1, 0);
    path.run(step_count(0.2, dt));
    res[lvl] = std::abs(path.energy_residual());
  }
  EXPECT_GT(res[0] / res[1], 1.8);
  EXPECT_GT(res[1] / res[2], 1.8);
}

TEST_F(IntegratorTest, GuardSplitsAndAborts) {
  PhysParams p;
  auto x = random_field(basis, 13, 0, 20.0);
  Integrator warn(p, nullptr, {1e-2}, basis);
  Path a(warn, x, 1, 0);
  try {
    a.step();
  } catch (const GuardAbort&) {
  }
  EXPECT_GT(a.guard_warnings(), 0u);

  Integrator split(p, nullptr, {1e-2, true, 12}, basis);
  Path b(split, x, 1, 0);
  b.run(5);
  EXPECT_TRUE(std::isfinite(norm_h_sq(b.state())));
  EXPECT_LT(norm_h_sq(b.state()), norm_h_sq(x));

  StepOptions tight{1e-3};
  tight.abort_norm = 1.0;
  Integrator abort(p, nullptr, tight, basis);
  Path c(abort, x, 1, 7);
  try {
    c.step();
    FAIL() << "expected abort";
  } catch (const GuardAbort& e) {
    EXPECT_EQ(e.trajectory(), 7u);
  }
}

TEST_F(IntegratorTest, ResumeMatchesUninterrupted) {
  Integrator integ(PhysParams{}, &noise, {1e-3}, basis);
  auto x = random_field(basis, 14, 0, 0.3);
  Path full(integ, x, 5, 2);
  full.run(100);
  Path first(integ, x, 5, 2);
  first.run(40);
  Path rest(integ, first.state(), first.ledger(), first.initial_norm_sq(), 5, 2, first.step_index());
  rest.run(60);
  EXPECT_TRUE(rest.state() == full.state());
  EXPECT_EQ(rest.ledger(), full.ledger());
}
