#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "parisian/gaussian_tail.hpp"
#include "parisian/grid.hpp"
#include "parisian/models.hpp"
#include "parisian/rng.hpp"

using namespace parisian;

// Reference values from tests/oracles/compute_oracles.py (mpmath, 50 digits).
namespace oracle {
constexpr double psi1 = 0.15865525393145705141;
constexpr double psi3 = 0.0013498980316300945267;
constexpr double psi4 = 3.1671241833119921254e-5;
constexpr double psi5 = 2.8665157187919391167e-7;
constexpr double psi10 = 7.619853024160526066e-24;
constexpr double psi20 = 2.7536241186062336951e-89;
constexpr double psi30 = 4.9067139271481870595e-198;
constexpr double psi37 = 5.7255712225245768227e-300;
constexpr double phi0 = 0.39894228040143267794;
}  // namespace oracle

TEST(Grid, EndpointsAndSpacing) {
  const auto g = make_grid(0.0, 1.0, 0.125);
  ASSERT_EQ(g.size(), 9u);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[8], 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 0.125, 1e-15);
}

TEST(Grid, RejectsNonIntegralSpan) {
  EXPECT_THROW(make_grid(0.0, 1.0, 0.3), std::invalid_argument);
  try {
    make_grid(0.0, 1.0, 0.3);
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("not an integral multiple"), std::string::npos);
  }
  EXPECT_THROW(make_grid(1.0, 0.5, 0.1), std::invalid_argument);
  EXPECT_THROW(make_grid(0.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(make_grid(0.0, 1.0, 0.001));
}

TEST(Grid, IndexLookup) {
  const auto g = make_grid(0.0, 2.0, 1.0 / 512);
  EXPECT_EQ(g.index_of(1.0).value(), 512u);
  EXPECT_FALSE(g.index_of(1.0 + 0.3 / 512).has_value());
  EXPECT_EQ(g.steps_in(0.25).value(), 128u);
  EXPECT_FALSE(g.index_of(2.5).has_value());
}

TEST(Rng, StreamsDependOnSeedAndIndexOnly) {
  auto a = path_rng(7, 3), b = path_rng(7, 3), c = path_rng(7, 4), d = path_rng(8, 3);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
  EXPECT_NE(derive_seed(7, 1), derive_seed(7, 2));
}

TEST(Rng, ParallelLoopVisitsEveryIndexOnce) {
  for (std::size_t workers : {1u, 3u, 8u}) {
    std::vector<int> seen(10007, 0);
    for_each_index(seen.size(), {workers, 97}, [&] { return [&](std::size_t i) { ++seen[i]; }; });
    for (int s : seen) ASSERT_EQ(s, 1);
  }
}

TEST(Rng, ParallelLoopPropagatesExceptions) {
  auto run = [] {
    for_each_index(1000, {4, 10}, [] {
      return [](std::size_t i) {
        if (i == 537) throw std::runtime_error("boom");
      };
    });
  };
  EXPECT_THROW(run(), std::runtime_error);
}

TEST(GaussTail, KnownValues) {
  EXPECT_EQ(gauss_sf(0.0), 0.5);
  EXPECT_NEAR(gauss_pdf(0.0), oracle::phi0, 1e-16);
  const std::pair<double, double> cases[] = {{1, oracle::psi1},   {3, oracle::psi3},   {4, oracle::psi4},
                                             {5, oracle::psi5},   {10, oracle::psi10}, {20, oracle::psi20},
                                             {30, oracle::psi30}, {37, oracle::psi37}};
  for (auto [x, want] : cases) EXPECT_NEAR(gauss_sf(x) / want, 1.0, 1e-12) << "x=" << x;
}

TEST(GaussTail, Symmetry) {
  for (double x = -8; x <= 8; x += 0.37) EXPECT_NEAR(gauss_sf(x) + gauss_sf(-x), 1.0, 1e-14);
}

TEST(GaussTail, LogTailMatchesDirectAndExtendsPastUnderflow) {
  for (double x : {-3.0, 0.0, 2.0, 7.9, 8.1, 12.0, 30.0, 37.0})
    EXPECT_NEAR(gauss_log_sf(x), std::log(gauss_sf(x)), 1e-12 * std::max(1.0, std::abs(std::log(gauss_sf(x)))));
  EXPECT_TRUE(std::isfinite(gauss_log_sf(60.0)));
  // Asymptotic series: -x^2/2 - log(x sqrt(2 pi)) + log(1 - 1/x^2 + 3/x^4).
  EXPECT_NEAR(gauss_log_sf(60.0), -1800.0 - 0.5 * std::log(2 * M_PI) - std::log(60.0) + std::log1p(-1.0 / 3600 + 3.0 / 3600 / 3600), 1e-9);
}

TEST(GaussTail, MillsRatioContinuousAcrossSwitch) {
  const double x = detail::kMillsSwitch;
  EXPECT_NEAR(mills_ratio(x - 1e-12), mills_ratio(x), 1e-10);
  EXPECT_NEAR(mills_ratio(3.0), oracle::psi3 / gauss_pdf(3.0), 1e-14);
}

TEST(GaussTail, PartialExpectation) {
  for (double x : {0.0, 0.5, 1.0, 2.0, 2.4}) EXPECT_NEAR(gauss_partial_expectation(x), gauss_pdf(x) - x * gauss_sf(x), 1e-15);
  // phi(x) - x Psi(x) ~ phi(x)/x^2 for large x.
  const double x = 20.0;
  EXPECT_NEAR(gauss_partial_expectation(x) / (gauss_pdf(x) / (x * x)), 1.0, 1e-2);
  EXPECT_GT(gauss_partial_expectation(x), 0.0);
}

TEST(Models, FbmCovariance) {
  const auto m = GaussianModel::fbm(0.5);
  EXPECT_NEAR(m.covariance(0.25, 0.75), 0.3294593112989455, 1e-15);
  EXPECT_EQ(m.variance(0.0), 0.0);
  EXPECT_NEAR(m.variance(4.0), 2.0, 1e-15);
  EXPECT_NEAR(m.roughness_rate(), 0.25, 0);
}

TEST(Models, BrownianIsFbmOne) {
  const auto b = GaussianModel::brownian();
  const auto f = GaussianModel::fbm(1.0);
  for (double s : {0.1, 0.5, 2.0})
    for (double t : {0.3, 1.0, 1.7}) EXPECT_NEAR(b.covariance(s, t), f.covariance(s, t), 1e-15);
}

TEST(Models, RejectsBadInputs) {
  EXPECT_THROW(GaussianModel::fbm(0.0), std::invalid_argument);
  EXPECT_THROW(GaussianModel::fbm(2.1), std::invalid_argument);
  EXPECT_THROW(GaussianModel::stationary_increments([](double t) { return t + 1; }), std::invalid_argument);
  EXPECT_THROW(GaussianModel::stationary_increments([](double t) { return -t; }), std::invalid_argument);
}

TEST(Models, LocalExpansionForFbm) {
  const auto le = LocalExpansion::for_fbm(1.5, 2.0);
  EXPECT_NO_THROW(le.validate());
  EXPECT_NEAR(le.sigma_S, std::pow(2.0, 0.75), 1e-15);
  EXPECT_NEAR(le.D, 1.0 / (2 * std::pow(2.0, 1.5)), 1e-15);
  EXPECT_EQ(le.A_pm, -le.A);
}
