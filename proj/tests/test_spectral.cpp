#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "scbf/errors.hpp"
#include "scbf/spectral.hpp"

using namespace scbf;

namespace {

// Reference count of lattice points 0 < |k|^2 <= cut with |k_i| <= N/2.
std::size_t brute_count(int n, int N, double cut) {
  std::size_t c = 0;
  int h = N / 2;
  int zr = n == 3 ? h : 0;
  for (int i = -h; i <= h; ++i)
    for (int j = -h; j <= h; ++j)
      for (int l = -zr; l <= zr; ++l) {
        int q = i * i + j * j + l * l;
        if (q > 0 && q <= cut) ++c;
      }
  return c;
}

}  // namespace

TEST(Basis, SmallestForcedSet) {
  auto b = SpectralBasis::build(2, 4, 1.5);
  EXPECT_EQ(b->lambda_first(), 1.0);
  EXPECT_EQ(b->forced_count(), 4u);
  EXPECT_EQ(b->lambda_cut(), 1.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(b->eigenvalue(i), 1.0);
  EXPECT_NE(b->find({1, 0, 0}), b->size());
  EXPECT_LT(b->find({0, -1, 0}), 4u);
}

TEST(Basis, TwelveModesBelowFour) {
  auto b = SpectralBasis::build(2, 8, 4.5);
  EXPECT_EQ(b->forced_count(), brute_count(2, 8, 4.5));
  EXPECT_EQ(b->forced_count(), 12u);
  EXPECT_EQ(b->lambda_cut(), 4.0);
  EXPECT_EQ(b->size(), 9u * 9u - 1u);
}

TEST(Basis, RejectsBadArguments) {
  EXPECT_THROW(SpectralBasis::build(2, 4, 10.0), InvalidArgument);
  EXPECT_THROW(SpectralBasis::build(2, 7, 1.5), InvalidArgument);
  EXPECT_THROW(SpectralBasis::build(2, 2, 0.5), InvalidArgument);
  EXPECT_THROW(SpectralBasis::build(4, 8, 1.5), InvalidArgument);
  EXPECT_THROW(SpectralBasis::build(1, 8, 1.5), InvalidArgument);
  EXPECT_THROW(SpectralBasis::build(2, 8, 0.5), InvalidArgument);
}

TEST(Basis, OrderingPairingPolarization) {
  for (int n : {2, 3}) {
    auto b = SpectralBasis::build(n, n == 2 ? 16 : 8, 5.0);
    EXPECT_EQ(b->forced_count(), brute_count(n, b->resolution(), 5.0));
    for (std::size_t i = 0; i < b->size(); ++i) {
      if (i > 0) {
        EXPECT_LE(b->eigenvalue(i - 1), b->eigenvalue(i));
      }
      const auto& k = b->wavevector(i);
      const auto& mk = b->wavevector(b->partner(i));
      for (int c = 0; c < 3; ++c) EXPECT_EQ(mk[c], -k[c]);
      EXPECT_NE(b->canonical(i), b->canonical(b->partner(i)));
      EXPECT_EQ(b->partner(b->partner(i)), i);
      for (int p = 0; p < b->polarizations(); ++p) {
        const auto& e = b->polarization(i, p);
        double dot = 0, nn = 0;
        for (int c = 0; c < n; ++c) {
          dot += e[c] * k[c];
          nn += e[c] * e[c];
        }
        EXPECT_NEAR(dot, 0.0, 1e-14);
        EXPECT_NEAR(nn, 1.0, 1e-14);
      }
      if (n == 3) {
        const auto& e0 = b->polarization(i, 0);
        const auto& e1 = b->polarization(i, 1);
        EXPECT_NEAR(e0[0] * e1[0] + e0[1] * e1[1] + e0[2] * e1[2], 0.0, 1e-14);
      }
    }
  }
}

TEST(Leray, WorkedExample) {
  auto b = SpectralBasis::build(2, 4, 1.5);
  RawField raw(b);
  std::size_t i = b->find({1, 0, 0});
  raw.at(i, 0) = 1.0;
  raw.at(i, 1) = 1.0;
  auto u = leray_project(raw);
  EXPECT_EQ(u.at(i, 0), Complex(0.0, 0.0));
  EXPECT_EQ(u.at(i, 1), Complex(1.0, 0.0));
}

TEST(Leray, GradientIsAnnihilated) {
  auto b = SpectralBasis::build(2, 16, 4.5);
  RawField g(b);
  for (std::size_t i = 0; i < b->size(); ++i) {
    Complex phi(std::sin(double(i)), std::cos(3.0 * i));
    for (int c = 0; c < 2; ++c) g.at(i, c) = Complex(0, 1) * double(b->wavevector(i)[c]) * phi;
  }
  auto u = leray_project(g);
  EXPECT_LT(norm_h(u), 1e-13 * norm_h(g));
}

TEST(Leray, IdempotentAndSelfAdjoint) {
  for (int n : {2, 3}) {
    auto b = SpectralBasis::build(n, 8, 2.5);
    for (std::uint64_t id = 0; id < 20; ++id) {
      RawField a(b), c(b);
      for (std::size_t i = 0; i < b->size(); ++i)
        for (int d = 0; d < n; ++d) {
          a.at(i, d) = Complex(normal_at({9, id, i, Stream::kProperty}, d), normal_at({9, id, i, Stream::kProperty}, d + 3));
          c.at(i, d) = Complex(normal_at({10, id, i, Stream::kProperty}, d), normal_at({10, id, i, Stream::kProperty}, d + 3));
        }
      auto pa = leray_project(a);
      auto pc = leray_project(c);
      auto ppa = leray_project(pa);
      EXPECT_LT(norm_h(ppa - pa), 1e-14 * norm_h(pa));
      double lhs = inner(pa, c), rhs = inner(a, pc);
      EXPECT_NEAR(lhs, rhs, 1e-12 * norm_h(a) * norm_h(c));
      EXPECT_LT(divergence_residual(pa), 1e-14);
    }
  }
}

TEST(Field, RandomFieldsAreRealSolenoidal) {
  for (int n : {2, 3}) {
    auto b = SpectralBasis::build(n, 8, 2.5);
    auto u = random_field(b, 1, 2);
    EXPECT_LT(divergence_residual(u), 1e-12);
    EXPECT_LT(reality_residual(u), 1e-15);
    EXPECT_GT(norm_h(u), 0.0);
    auto again = random_field(b, 1, 2);
    EXPECT_TRUE(u == again);
  }
}

TEST(Split, OrthogonalAndExact) {
  auto b = SpectralBasis::build(2, 16, 4.5);
  for (std::uint64_t id = 0; id < 200; ++id) {
    auto u = random_field(b, 3, id);
    auto [lo, hi] = split_low_high(u);
    EXPECT_TRUE(lo + hi == u);
    EXPECT_EQ(inner(lo, hi), 0.0);
    EXPECT_NEAR(norm_h_sq(u), norm_h_sq(lo) + norm_h_sq(hi), 1e-14 * norm_h_sq(u));
    double lam = b->lambda_cut();
    EXPECT_LE(norm_v_sq(lo), lam * norm_h_sq(lo) * (1 + 1e-14));
    EXPECT_GE(norm_v_sq(hi), lam * norm_h_sq(hi));
  }
}

TEST(Split, SingleModeAndTwoModes) {
  auto b = SpectralBasis::build(2, 8, 4.0);
  VelocityField u(b);
  u.add_mode({1, 0, 0}, 0, 0.7);
  auto [lo, hi] = split_low_high(u);
  EXPECT_EQ(norm_h(hi), 0.0);
  VelocityField v(b);
  v.add_mode({1, 0, 0}, 0, 0.3);
  v.add_mode({3, 0, 0}, 0, 0.3);
  auto [lo2, hi2] = split_low_high(v);
  EXPECT_NEAR(norm_h(lo2), 0.3, 1e-15);
  EXPECT_NEAR(norm_h(hi2), 0.3, 1e-15);
}

TEST(Norm, SingleModeWeights) {
  auto b = SpectralBasis::build(2, 8, 1.5);
  VelocityField u(b);
  u.add_mode({2, 0, 0}, 0, Complex(0.6, -0.8) * 1.5);
  EXPECT_NEAR(norm_h(u), 1.5, 1e-15);
  EXPECT_NEAR(norm_v(u), 3.0, 1e-15);
}

TEST(Norm, PoincareAndParseval) {
  for (int n : {2, 3}) {
    auto b = SpectralBasis::build(n, n == 2 ? 16 : 8, 2.5);
    Transformer tr(b);
    for (std::uint64_t id = 0; id < 50; ++id) {
      auto u = random_field(b, 4, id);
      EXPECT_GE(norm_v_sq(u), b->lambda_first() * norm_h_sq(u));
      EXPECT_NEAR(tr.norm(u, NormKind::kLp, 2.0), norm_h(u), 1e-8 * norm_h(u));
    }
    EXPECT_THROW(tr.norm(random_field(b, 4, 0), NormKind::kLp, 0.5), InvalidArgument);
  }
}

TEST(Transform, SingleModeProfile) {
  auto b = SpectralBasis::build(2, 8, 1.5);
  Transformer tr(b);
  const double a = 0.5;
  VelocityField u(b);
  u.add_mode({1, 0, 0}, 0, a);
  auto f = tr.to_physical(u);
  // Polarization of (1,0) is (0,1): u = sqrt2 a cos(x1) (0,1) / (2pi).
  double peak = 0.0;
  const int m = f.grid_points();
  for (std::size_t q = 0; q < f.points(); ++q) {
    EXPECT_NEAR(f.component(0)[q], 0.0, 1e-15);
    peak = std::max(peak, std::abs(f.component(1)[q]));
    int i0 = static_cast<int>(q / m);
    double x1 = 2.0 * std::numbers::pi * i0 / m;
    EXPECT_NEAR(f.component(1)[q], std::numbers::sqrt2 * a * std::cos(x1) / (2.0 * std::numbers::pi), 1e-14);
  }
  EXPECT_NEAR(peak, std::numbers::sqrt2 * a / (2.0 * std::numbers::pi), 1e-15);
}

TEST(Transform, ZeroAndRoundTrip) {
  for (int n : {2, 3}) {
    auto b = SpectralBasis::build(n, 8, 2.5);
    Transformer tr(b);
    auto z = tr.to_physical(VelocityField(b));
    for (int c = 0; c < n; ++c)
      for (double x : z.component(c)) EXPECT_EQ(x, 0.0);
    for (std::uint64_t id = 0; id < 10; ++id) {
      auto u = random_field(b, 5, id);
      auto back = tr.to_spectral(tr.to_physical(u));
      EXPECT_LT(norm_h(back - u), 1e-10 * norm_h(u));
    }
  }
}

TEST(Transform, MismatchRejected) {
  auto b1 = SpectralBasis::build(2, 8, 1.5);
  auto b2 = SpectralBasis::build(2, 16, 1.5);
  Transformer tr(b1);
  EXPECT_THROW(tr.to_physical(VelocityField(b2)), MismatchError);
  EXPECT_THROW(VelocityField(b1) += VelocityField(b2), MismatchError);
}
