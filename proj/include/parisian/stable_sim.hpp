#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "parisian/gaussian_paths.hpp"
#include "parisian/grid.hpp"
#include "parisian/parisian_estimator.hpp"
#include "parisian/rng.hpp"

namespace parisian {

/// X(t) ~ S_alpha(t^{1/alpha}, beta, 0), stationary independent increments.
struct StableSpec {
  double alpha = 1.5;
  double beta = 0.0;

  void validate() const {
    if (!(alpha > 1 && alpha < 2)) throw std::invalid_argument("StableSpec: alpha must lie strictly inside (1,2)");
    if (!(beta >= -1 && beta <= 1)) throw std::invalid_argument("StableSpec: beta must lie in [-1,1]");
  }
};

/// Chambers-Mallows-Stuck generator for S_alpha(1, beta, 0), alpha != 1.
class StableVariate {
 public:
  StableVariate(double alpha, double beta) : alpha_(alpha) {
    const double t = beta * std::tan(std::numbers::pi * alpha / 2);
    b_ = std::atan(t) / alpha;
    scale_ = std::pow(1 + t * t, 1 / (2 * alpha));
  }

  double operator()(PathRng& rng) const {
    const double v = std::numbers::pi * (open_uniform(rng) - 0.5);
    ExponentialDist expo;
    const double w = expo(rng);
    const double a = alpha_ * (v + b_);
    return scale_ * std::sin(a) / std::pow(std::cos(v), 1 / alpha_) *
           std::pow(std::cos(v - a) / w, (1 - alpha_) / alpha_);
  }

 private:
  double alpha_;
  double b_ = 0.0;
  double scale_ = 1.0;
};

/// Path sampler with increments step^{1/alpha} S_alpha(1, beta, 0).
class StableSampler {
 public:
  StableSampler(const StableSpec& spec, TimeGrid grid)
      : grid_(std::move(grid)), variate_(spec.alpha, spec.beta), h_(std::pow(grid_.step(), 1 / spec.alpha)) {
    spec.validate();
    if (grid_.start() != 0.0) throw std::invalid_argument("StableSampler: grid must start at 0");
  }

  double sample(PathRng& rng, std::span<double> out) {
    double x = 0.0;
    out[0] = 0.0;
    for (std::size_t k = 1; k < out.size(); ++k) {
      x += h_ * variate_(rng);
      out[k] = x;
    }
    return 0.0;
  }

  const TimeGrid& grid() const { return grid_; }

 private:
  TimeGrid grid_;
  StableVariate variate_;
  double h_;
};

inline PathBatch sample_stable_paths(const StableSpec& spec, const TimeGrid& grid, std::size_t n, std::uint64_t seed,
                                     const ParallelOptions& par = {}) {
  spec.validate();
  return sample_batch(StableSampler(spec, grid), n, seed,
                      "stable(alpha=" + std::to_string(spec.alpha) + ",beta=" + std::to_string(spec.beta) + ")",
                      false, par);
}

namespace detail {

inline FunctionalSample run_stable(const StableSpec& spec, double c, double S, double T, double step,
                                   std::size_t n, std::uint64_t seed, const ParallelOptions& par) {
  const TimeGrid grid = make_grid(0.0, S + T, step);
  const auto geom = window_geometry(grid, S, T);
  return sample_functional(StableSampler(spec, grid), c, geom, n, seed, false, par);
}

}  // namespace detail

/// Plain Monte Carlo of the Parisian functional over stable paths for a ladder of u.
inline std::vector<MCEstimate> estimate_parisian_stable_ladder(const StableSpec& spec, double c, double S,
                                                               std::span<const double> us, double T,
                                                               const MCConfig& config) {
  spec.validate();
  if (!(c >= 0) || !(S > 0)) throw std::invalid_argument("estimate_parisian_stable: need c >= 0 and S > 0");
  if (!(T >= 0) || !std::isfinite(T)) throw std::invalid_argument("estimate_parisian_stable: window must be bounded");
  for (double u : us)
    if (!(u > 0)) throw std::invalid_argument("estimate_parisian_stable: u must be > 0");
  config.validate(S, T);
  const auto fs = detail::run_stable(spec, c, S, T, config.grid_step, config.n_paths, config.seed, config.parallel());
  std::optional<FunctionalSample> fh;
  if (config.step_halving)
    fh = detail::run_stable(spec, c, S, T, config.grid_step / 2, config.n_paths,
                            derive_seed(config.seed, detail::kHalvingTag), config.parallel());
  std::vector<MCEstimate> out;
  for (double u : us) {
    auto e = summarize_exceedance(fs, u);
    e.window = T;
    if (T > S) e.notes.push_back("window length exceeds the horizon");
    // Sup/inf errors of a jump process scale like step^{1/alpha}.
    if (fh) e.halving = compare_halving(e, summarize_exceedance(*fh, u), 1 / spec.alpha);
    out.push_back(std::move(e));
  }
  return out;
}

inline MCEstimate estimate_parisian_stable(const StableSpec& spec, double c, double S, double u, double T,
                                           const MCConfig& config) {
  return estimate_parisian_stable_ladder(spec, c, S, std::span<const double>(&u, 1), T, config)[0];
}

/// P(sup_{[0,S]} X > u) by the same machinery (c = 0, T = 0).
inline std::vector<MCEstimate> estimate_stable_sup_ladder(const StableSpec& spec, double S, std::span<const double> us,
                                                          const MCConfig& config) {
  return estimate_parisian_stable_ladder(spec, 0.0, S, us, 0.0, config);
}

}  // namespace parisian
