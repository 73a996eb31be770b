#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "evlab/errors.hpp"
#include "evlab/numerics.hpp"
#include "evlab/rng.hpp"
#include "oracles.hpp"

using namespace evlab;

TEST(Integrate, MatchesBoostOnSmoothIntegrands) {
  struct Case {
    std::function<double(double)> f;
    double a, b;
  };
  std::vector<Case> cases{
      {[](double x) { return std::exp(-x * x); }, -3.0, 5.0},
      {[](double x) { return std::sin(x) * std::sin(x); }, 0.0, 10.0},
      {[](double x) { return 1.0 / (1.0 + 25.0 * x * x); }, -1.0, 1.0},
  };
  for (const auto& c : cases) {
    const double got = numerics::integrate(c.f, c.a, c.b, {1e-11, 0.0, 4000});
    const double want = oracle::integrate(c.f, c.a, c.b);
    EXPECT_NEAR(got, want, 1e-9 * std::abs(want));
  }
}

TEST(Integrate, EndpointSingularities) {
  EXPECT_NEAR(numerics::integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0, {1e-11, 0.0, 4000}),
              2.0 / 3.0, 1e-10);
  const double a = 1e-12;
  EXPECT_NEAR(numerics::integrate([](double x) { return std::log(x); }, a, 1.0, {1e-11, 0.0, 4000}),
              -1.0 - (a * std::log(a) - a), 1e-10);
}

TEST(Integrate, ThrowsWhenPanelsRunOut) {
  auto wild = [](double x) { return std::sin(1.0 / x); };
  EXPECT_THROW(numerics::integrate(wild, 1e-6, 1.0, {1e-14, 0.0, 8}), NumericalError);
}

TEST(IntegrateBatched, ComponentsShareMeshAndMatchScalar) {
  auto f = [](std::span<const double> nodes, std::span<double> out) {
    const std::size_t n = nodes.size();
    for (std::size_t k = 0; k < n; ++k) {
      out[k] = std::exp(-nodes[k] * nodes[k]);
      out[n + k] = std::exp(-(nodes[k] - 1.0) * (nodes[k] - 1.0) * 4.0);
    }
  };
  std::vector<double> breaks{-8.0, 0.0, 8.0};
  auto r = numerics::integrate_batched(f, 2, breaks, {1e-10, 0.0, 4000});
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.values[0], std::sqrt(M_PI), 1e-9);
  EXPECT_NEAR(r.values[1], std::sqrt(M_PI) / 2.0, 1e-9);
  EXPECT_GT(r.evaluations, 0u);
}

TEST(IntegrateBatched, WorkspaceReuseGivesIdenticalResults) {
  auto f = [](std::span<const double> nodes, std::span<double> out) {
    for (std::size_t k = 0; k < nodes.size(); ++k) out[k] = 1.0 / (1.0 + nodes[k] * nodes[k]);
  };
  std::vector<double> breaks{-50.0, 50.0};
  numerics::QuadratureWorkspace ws;
  auto a = numerics::integrate_batched(f, 1, breaks, {}, &ws);
  auto b = numerics::integrate_batched(f, 1, breaks, {}, &ws);
  auto c = numerics::integrate_batched(f, 1, breaks);
  EXPECT_EQ(a.values[0], b.values[0]);
  EXPECT_EQ(a.values[0], c.values[0]);
  EXPECT_NEAR(a.values[0], 2.0 * std::atan(50.0), 1e-8);
}

TEST(IntegrateBatched, RejectsBadBreakpoints) {
  auto f = [](std::span<const double>, std::span<double> out) {
    for (double& v : out) v = 1.0;
  };
  std::vector<double> one{0.0};
  std::vector<double> unsorted{1.0, 0.0};
  EXPECT_THROW(numerics::integrate_batched(f, 1, one), std::invalid_argument);
  EXPECT_THROW(numerics::integrate_batched(f, 1, unsorted), std::invalid_argument);
}

TEST(GoldenSection, FindsMaximum) {
  auto f = [](double x) { return -(x - 0.3) * (x - 0.3); };
  EXPECT_NEAR(numerics::golden_section_maximize(f, 0.0, 1.0), 0.3, 1e-7);
  auto edge = [](double x) { return x; };
  EXPECT_NEAR(numerics::golden_section_maximize(edge, 0.0, 1.0), 1.0, 1e-7);
}

TEST(RegularizedGammaQ, MatchesBoost) {
  for (double a : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
    for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 40.0, 100.0}) {
      const double want = oracle::gamma_q(a, x);
      const double got = numerics::regularized_gamma_q(a, x);
      if (want > 1e-280) EXPECT_NEAR(got / want, 1.0, 1e-10) << "a=" << a << " x=" << x;
    }
  }
  EXPECT_EQ(numerics::regularized_gamma_q(3.0, 0.0), 1.0);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  auto a = Rng::for_stream(42, 7);
  auto b = Rng::for_stream(42, 7);
  auto c = Rng::for_stream(42, 8);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
}

TEST(Rng, MomentsOfSamplers) {
  Rng rng(11);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sb = 0, sg = 0;
  for (int i = 0; i < n; ++i) {
    su += rng.uniform();
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    sb += rng.beta(2.0, 5.0);
    sg += rng.gamma(0.5);
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.01);
  EXPECT_NEAR(sb / n, 2.0 / 7.0, 0.003);
  EXPECT_NEAR(sg / n, 0.5, 0.01);
}

TEST(Rng, UniformOpenExcludesZero) {
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
