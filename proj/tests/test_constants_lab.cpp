#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "parisian/constants_lab.hpp"

using namespace parisian;

namespace oracle {
// E exp(sup_{[0,lambda]} (sqrt2 t Z - t^2)) by 1-D quadrature; equals lambda/sqrt(pi) + 1.
constexpr double F2[][2] = {{5, 3.82094791773878}, {10, 6.64189583547756}, {20, 12.2837916709551}};
constexpr double inv_sqrt_pi = 0.564189583547756;
}  // namespace oracle

namespace {

FunctionalSpec pickands(double alpha, double lambda, double T, double step = 0.01) {
  FunctionalSpec s;
  s.alpha = alpha;
  s.lambda = lambda;
  s.T = T;
  s.grid_step = step;
  return s;
}

// sqrt2 B on x = -T + k step with B(0) = 0, drawn with std::normal_distribution.
std::vector<double> two_sided_bm(std::mt19937_64& rng, double T, double lambda, double step) {
  const std::size_t w = std::llround(T / step), L = std::llround(lambda / step);
  std::normal_distribution<double> z(0.0, std::sqrt(2 * step));
  std::vector<double> x(w + L + 1, 0.0);
  for (std::size_t k = w + 1; k < x.size(); ++k) x[k] = x[k - 1] + z(rng);
  for (std::size_t k = w; k-- > 0;) x[k] = x[k + 1] + z(rng);
  return x;
}

}  // namespace

TEST(Functional, ZeroPath) {
  auto s = pickands(1.0, 1.0, 0.0, 0.125);
  EXPECT_EQ(evaluate_functional(std::vector<double>(9, 0.0), s), 0.0);
  s.T = 0.5;
  EXPECT_DOUBLE_EQ(evaluate_functional(std::vector<double>(13, 0.0), s), -0.25);
  s.alpha = 0.5;
  EXPECT_DOUBLE_EQ(evaluate_functional(std::vector<double>(13, 0.0), s), -std::sqrt(0.25));
}

TEST(Functional, SupAndInfModes) {
  FunctionalSpec s;
  s.mode = ConstantMode::sup_const;
  s.alpha = 1;
  s.b1 = 1;
  s.T = 1;
  s.grid_step = 0.5;
  const std::vector<double> x = {0.0, 2.0, 1.0};
  EXPECT_DOUBLE_EQ(evaluate_functional(x, s), 1.0);  // max(0, 2 - 1, 1 - 2)
  s.mode = ConstantMode::inf_const;
  EXPECT_DOUBLE_EQ(evaluate_functional(x, s), 0.0);  // min(0, 2 - 0.5, 1 - 1)
  EXPECT_THROW(evaluate_functional(std::vector<double>(4, 0.0), s), std::invalid_argument);
}

TEST(Functional, Validation) {
  EXPECT_THROW(pickands(1.0, 5.005, 0.0).validate(), std::invalid_argument);
  EXPECT_THROW(pickands(2.5, 5, 0).validate(), std::invalid_argument);
  auto p = pickands(1.0, 5, 0);
  p.mode = ConstantMode::piterbarg;
  p.b1 = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.b1 = 1;
  p.beta = 0.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Estimate, MatchesPlainMonteCarloAtSmallLambda) {
  const auto spec = pickands(1.0, 1.0, 0.2, 0.01);
  const auto e = estimate_constant(spec, 20000, 5);
  std::mt19937_64 rng(77);
  const std::size_t n = 20000;
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::exp(evaluate_functional(two_sided_bm(rng, 0.2, 1.0, 0.01), spec));
    s += v;
    s2 += v * v;
  }
  const double m = s / n, se = std::sqrt((s2 / n - m * m) / (n - 1));
  EXPECT_NEAR(e.value, m, 4 * std::hypot(e.stderr, se));
}

TEST(Estimate, LinearDriftPickandsOracle) {
  // alpha = 2: sqrt2 B(t) - t^2 in law equals sqrt2 t Z - t^2.
  const auto e = estimate_constant(pickands(2.0, 5.0, 0.0), 20000, 9);
  EXPECT_NEAR(e.value, oracle::F2[0][1], 4 * e.stderr + 0.01 * oracle::F2[0][1]);
}

TEST(Estimate, ExtrapolationRecoversSlope) {
  std::vector<LambdaPoint> pts;
  for (const auto& p : oracle::F2) pts.push_back({p[0], p[1], 0.01});
  const auto e = extrapolate_pickands(pts);
  EXPECT_NEAR(e.value, oracle::inv_sqrt_pi, 1e-12);
  EXPECT_TRUE(e.extrapolated);
  EXPECT_EQ(e.diagnostics.size(), 3u);
}

TEST(Estimate, ExtrapolationRejections) {
  std::vector<LambdaPoint> two = {{5, 3, 0.1}, {10, 6, 0.1}};
  EXPECT_THROW(extrapolate_pickands(two), std::invalid_argument);
  std::vector<LambdaPoint> down = {{5, 6, 0.1}, {10, 5, 0.1}, {20, 4, 0.1}};
  EXPECT_THROW(extrapolate_pickands(down), std::runtime_error);
}

TEST(Estimate, NegativeInterceptIsNoted) {
  std::vector<LambdaPoint> pts = {{5, 4, 0.01}, {10, 9, 0.01}, {20, 19, 0.01}};
  const auto e = extrapolate_pickands(pts);
  EXPECT_NEAR(e.value, 1.0, 1e-12);
  EXPECT_FALSE(e.notes.empty());
}

TEST(Estimate, FamilyMonotoneInWindow) {
  const std::vector<double> Ts = {0.0, 0.05, 0.2, 0.5};
  const auto fam = estimate_constant_family(pickands(1.0, 2.0, 0.0), Ts, 2000, 13);
  for (std::size_t j = 1; j < fam.size(); ++j) EXPECT_LE(fam[j].value, fam[j - 1].value);
  // The T = 0 member reproduces a direct run with the same tilt window.
  EXPECT_GT(fam[0].value, 1.0);
}

TEST(Estimate, SupConstWithoutPenaltyIsPickandsAtZeroWindow) {
  FunctionalSpec s;
  s.mode = ConstantMode::sup_const;
  s.alpha = 1;
  s.b1 = 0;
  s.T = 2;
  s.grid_step = 0.01;
  const auto a = estimate_constant(s, 20000, 17);
  const auto b = estimate_constant(pickands(1.0, 2.0, 0.0), 20000, 18);
  EXPECT_NEAR(a.value, b.value, 4 * std::hypot(a.stderr, b.stderr));
}

TEST(Estimate, ZeroRangeIsOne) {
  FunctionalSpec s;
  s.mode = ConstantMode::sup_const;
  s.b1 = 1;
  s.T = 0;
  EXPECT_EQ(estimate_constant(s, 100, 1).value, 1.0);
  s.mode = ConstantMode::inf_const;
  EXPECT_EQ(estimate_constant(s, 100, 1).value, 1.0);
}

TEST(Estimate, InfConstBoundedByOne) {
  FunctionalSpec s;
  s.mode = ConstantMode::inf_const;
  s.alpha = 1;
  s.T = 1;
  s.grid_step = 0.01;
  const auto e = estimate_constant(s, 5000, 19);
  EXPECT_GT(e.value, 0.0);
  EXPECT_LT(e.value, 1.0);
}

TEST(Estimate, StrongPiterbargPenaltyTendsToOne) {
  auto s = pickands(1.0, 5.0, 0.0);
  s.mode = ConstantMode::piterbarg;
  s.b1 = 1e3;
  s.b2 = 1e3;
  const auto e = estimate_constant(s, 5000, 23);
  EXPECT_NEAR(e.value, 1.0, 0.02);
}

TEST(Estimate, PickandsOneRoughly) {
  const auto e = estimate_constant_ladder(pickands(1.0, 5.0, 0.0), kDefaultLambdas, 20000, 29);
  EXPECT_GT(e.value, 0.8);
  EXPECT_LT(e.value, 1.2);
  EXPECT_EQ(e.diagnostics.size(), 3u);
}

TEST(Estimate, DeterministicAcrossWorkerCounts) {
  auto s = pickands(0.8, 2.0, 0.1);
  const auto a = estimate_constant(s, 3000, 31, ParallelOptions{1, 64});
  const auto b = estimate_constant(s, 3000, 31, ParallelOptions{4, 17});
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.stderr, b.stderr);
}

TEST(Modes, NamesRoundTrip) {
  for (auto m : {ConstantMode::pickands, ConstantMode::piterbarg, ConstantMode::inf_const, ConstantMode::sup_const})
    EXPECT_EQ(*parse_constant_mode(to_string(m)), m);
  EXPECT_FALSE(parse_constant_mode("nope").has_value());
}
