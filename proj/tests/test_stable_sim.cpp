#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "parisian/stable_sim.hpp"

using namespace parisian;

namespace {

// E exp(i t X) for S_alpha(1, beta, 0), t > 0.
std::complex<double> stable_cf(double alpha, double beta, double t) {
  const double ta = std::pow(t, alpha);
  return std::exp(std::complex<double>(-ta, ta * beta * std::tan(std::numbers::pi * alpha / 2)));
}

std::complex<double> empirical_cf(const std::vector<double>& xs, double t) {
  std::complex<double> s = 0;
  for (double x : xs) s += std::exp(std::complex<double>(0, t * x));
  return s / static_cast<double>(xs.size());
}

MCConfig config(std::size_t n, double step, std::uint64_t seed) {
  MCConfig c;
  c.n_paths = n;
  c.grid_step = step;
  c.seed = seed;
  c.step_halving = false;
  return c;
}

}  // namespace

TEST(Variate, CharacteristicFunction) {
  for (double alpha : {1.2, 1.5, 1.8})
    for (double beta : {-0.7, 0.0, 1.0}) {
      StableVariate v(alpha, beta);
      std::vector<double> xs(200000);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        auto rng = path_rng(3, i);
        xs[i] = v(rng);
      }
      for (double t : {0.3, 1.0, 2.0}) {
        const auto e = empirical_cf(xs, t), ex = stable_cf(alpha, beta, t);
        EXPECT_NEAR(e.real(), ex.real(), 5 / std::sqrt(2e5)) << alpha << " " << beta << " " << t;
        EXPECT_NEAR(e.imag(), ex.imag(), 5 / std::sqrt(2e5)) << alpha << " " << beta << " " << t;
      }
    }
}

TEST(Paths, TerminalValueHasUnitScale) {
  const auto g = make_grid(0, 1, 0.01);
  const auto b = sample_stable_paths({1.5, 0.3}, g, 100000, 5);
  std::vector<double> end(b.n_paths);
  for (std::size_t i = 0; i < b.n_paths; ++i) end[i] = b.value(i, g.size() - 1);
  for (double t : {0.5, 1.5}) {
    const auto e = empirical_cf(end, t), ex = stable_cf(1.5, 0.3, t);
    EXPECT_NEAR(e.real(), ex.real(), 5 / std::sqrt(1e5));
    EXPECT_NEAR(e.imag(), ex.imag(), 5 / std::sqrt(1e5));
  }
  for (std::size_t i = 0; i < b.n_paths; ++i) EXPECT_EQ(b.value(i, 0), 0.0);
}

TEST(Paths, DeterministicAcrossWorkers) {
  const auto g = make_grid(0, 1, 0.05);
  const auto a = sample_stable_paths({1.5, 0}, g, 500, 7, {1, 64});
  const auto b = sample_stable_paths({1.5, 0}, g, 500, 7, {3, 11});
  EXPECT_EQ(a.values, b.values);
}

TEST(Spec, Validation) {
  EXPECT_THROW((StableSpec{1.0, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((StableSpec{2.0, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((StableSpec{1.5, 1.5}).validate(), std::invalid_argument);
  EXPECT_THROW(estimate_parisian_stable({1.5, 0}, 1, 1, -1, 0.1, config(1000, 0.01, 1)), std::invalid_argument);
}

TEST(Estimator, ParisianBelowSupAndClassical) {
  const std::vector<double> us = {1.0, 2.0, 4.0};
  const StableSpec spec{1.5, 0};
  const auto sup = estimate_stable_sup_ladder(spec, 1.0, us, config(20000, 0.01, 9));
  const auto par = estimate_parisian_stable_ladder(spec, 1.0, 1.0, us, 0.1, config(20000, 0.01, 9));
  for (std::size_t i = 0; i < us.size(); ++i) {
    EXPECT_LE(par[i].p_hat, sup[i].p_hat);
    if (i) {
      EXPECT_LE(sup[i].p_hat, sup[i - 1].p_hat);
    }
  }
}

TEST(Estimator, SupAtLeastTerminalTail) {
  const std::vector<double> us = {3.0};
  const auto sup = estimate_stable_sup_ladder({1.5, 0}, 1.0, us, config(50000, 0.01, 11));
  const auto g = make_grid(0, 1, 0.01);
  const auto b = sample_stable_paths({1.5, 0}, g, 50000, 11);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < b.n_paths; ++i) hits += b.value(i, g.size() - 1) > 3.0;
  EXPECT_GE(sup[0].p_hat, static_cast<double>(hits) / 50000);
}

TEST(Estimator, HalvingUsesJumpRate) {
  auto cfg = config(5000, 0.02, 13);
  cfg.step_halving = true;
  const auto e = estimate_parisian_stable({1.5, 0}, 1, 1, 1, 0.1, cfg);
  ASSERT_TRUE(e.halving.has_value());
  EXPECT_NEAR(e.halving->bias_bound, std::abs(e.halving->shift) / (1 - std::pow(2.0, -1 / 1.5)), 1e-15);
}
