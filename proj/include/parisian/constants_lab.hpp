#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "parisian/gaussian_paths.hpp"
#include "parisian/grid.hpp"
#include "parisian/models.hpp"
#include "parisian/parisian_estimator.hpp"
#include "parisian/rng.hpp"
#include "parisian/stats.hpp"

namespace parisian {

enum class ConstantMode { pickands, piterbarg, inf_const, sup_const };

inline std::string_view to_string(ConstantMode m) {
  switch (m) {
    case ConstantMode::pickands: return "pickands";
    case ConstantMode::piterbarg: return "piterbarg";
    case ConstantMode::inf_const: return "inf_const";
    case ConstantMode::sup_const: return "sup_const";
  }
  return "?";
}

inline std::optional<ConstantMode> parse_constant_mode(std::string_view s) {
  for (auto m : {ConstantMode::pickands, ConstantMode::piterbarg, ConstantMode::inf_const, ConstantMode::sup_const})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

/// Functional behind a Pickands/Piterbarg-type constant.
///
/// pickands, piterbarg: sup_{t in [0,lambda]} inf_{s in [0,T]} g(t-s) with
///   g(x) = sqrt2 B(x) - |x|^a - b1 |x|^a 1{x>0} - b2 |x|^a 1{x<=0, alpha==beta}
///   (pickands uses b1 = b2 = 0).
/// inf_const, sup_const: inf / sup over [0,T] of sqrt2 B(t) - t^a; sup_const
///   also subtracts b1 t^a when b1 > 0.
struct FunctionalSpec {
  ConstantMode mode = ConstantMode::pickands;
  double alpha = 1.0;
  double beta = 1.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double T = 0.0;
  double lambda = 10.0;
  double grid_step = 0.01;

  void validate() const {
    if (!(alpha > 0 && alpha <= 2)) throw std::invalid_argument("FunctionalSpec: alpha must lie in (0,2]");
    if (!(T >= 0) || !std::isfinite(T)) throw std::invalid_argument("FunctionalSpec: T must be >= 0");
    if (!(grid_step > 0)) throw std::invalid_argument("FunctionalSpec: grid_step must be > 0");
    if (mode == ConstantMode::piterbarg) {
      if (!(b1 > 0)) throw std::invalid_argument("FunctionalSpec: piterbarg needs b1 > 0");
      if (!(beta >= alpha)) throw std::invalid_argument("FunctionalSpec: piterbarg needs beta >= alpha");
      if (!std::isfinite(b2)) throw std::invalid_argument("FunctionalSpec: b2 must be finite");
    }
    if (mode == ConstantMode::sup_const && !(b1 >= 0))
      throw std::invalid_argument("FunctionalSpec: sup_const needs b1 >= 0");
    if (mode == ConstantMode::pickands || mode == ConstantMode::piterbarg) {
      if (!(lambda >= grid_step)) throw std::invalid_argument("FunctionalSpec: lambda must be >= grid_step");
      check_aligned(lambda, "lambda");
    }
    check_aligned(T, "T");
  }

  /// Length of the sup range [0, lambda] (or [0, T] for sup_const / inf_const).
  double sup_length() const {
    return (mode == ConstantMode::pickands || mode == ConstantMode::piterbarg) ? lambda : T;
  }
  /// Length of the inner inf window.
  double window() const {
    return (mode == ConstantMode::pickands || mode == ConstantMode::piterbarg) ? T : 0.0;
  }

 private:
  void check_aligned(double v, const char* name) const {
    const double k = v / grid_step;
    if (std::abs(k - std::round(k)) > 1e-9) {
      std::ostringstream os;
      os << "FunctionalSpec: " << name << " = " << v << " is not a multiple of grid_step " << grid_step;
      throw std::invalid_argument(os.str());
    }
  }
};

struct LambdaPoint {
  double lambda = 0.0;
  double raw = 0.0;
  double stderr = 0.0;
  double raw_over_lambda() const { return raw / lambda; }
};

struct ConstantEstimate {
  double value = 0.0;
  double stderr = 0.0;
  std::size_t n = 0;
  double lambda = 0.0;
  double T = 0.0;
  double grid_step = 0.0;
  bool extrapolated = false;
  std::vector<LambdaPoint> diagnostics;
  std::vector<std::string> notes;
};

namespace detail {

inline double penalty(const FunctionalSpec& spec, double x) {
  const double ax = std::pow(std::abs(x), spec.alpha);
  double p = ax;
  if (spec.mode == ConstantMode::piterbarg) {
    if (x > 0) p += spec.b1 * ax;
    else if (spec.alpha == spec.beta) p += spec.b2 * ax;
  } else if (spec.mode == ConstantMode::sup_const && x > 0) {
    p += spec.b1 * ax;
  }
  return p;
}

}  // namespace detail

/// Evaluates the functional on sqrt2 B given at x_k = -T + k delta, k = 0..(T+lambda)/delta
/// (for inf_const / sup_const the path lives on [0,T]).
inline double evaluate_functional(std::span<const double> sqrt2_b, const FunctionalSpec& spec) {
  spec.validate();
  const double d = spec.grid_step;
  if (spec.mode == ConstantMode::inf_const || spec.mode == ConstantMode::sup_const) {
    const std::size_t m = static_cast<std::size_t>(std::llround(spec.T / d));
    if (sqrt2_b.size() != m + 1) throw std::invalid_argument("evaluate_functional: path does not match [0,T]");
    double best = spec.mode == ConstantMode::inf_const ? INFINITY : -INFINITY;
    for (std::size_t k = 0; k <= m; ++k) {
      const double v = sqrt2_b[k] - detail::penalty(spec, static_cast<double>(k) * d);
      best = spec.mode == ConstantMode::inf_const ? std::min(best, v) : std::max(best, v);
    }
    return best;
  }
  const std::size_t w = static_cast<std::size_t>(std::llround(spec.T / d));
  const std::size_t L = static_cast<std::size_t>(std::llround(spec.lambda / d));
  if (sqrt2_b.size() != w + L + 1) throw std::invalid_argument("evaluate_functional: path does not match [-T,lambda]");
  std::vector<double> g(sqrt2_b.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    g[k] = sqrt2_b[k] - detail::penalty(spec, (static_cast<double>(k) - static_cast<double>(w)) * d);
  const TimeGrid grid = make_grid(0.0, static_cast<double>(g.size() - 1) * d, d);
  SlidingMin sm;
  return sm.sup_inf(g, grid, 0.0, {0, L, w});
}

namespace detail {

/// Shared machinery for the tilt-mixture estimator of E exp(F).
class ConstantSampler {
 public:
  ConstantSampler(const FunctionalSpec& spec, double T_max) : spec_(spec) {
    const double d = spec.grid_step;
    tmax_steps_ = static_cast<std::size_t>(std::llround(T_max / d));
    sup_steps_ = static_cast<std::size_t>(std::llround(spec.sup_length() / d));
    const std::size_t total = tmax_steps_ + sup_steps_;
    grid_ = make_grid(0.0, static_cast<double>(total) * d, d);
    sampler_ = make_path_sampler(GaussianModel::fbm(spec.alpha), grid_);
    sqrt2_b_.resize(grid_.size());
    g_.resize(grid_.size());
    buf_.resize(grid_.size());

    // Tilt points tau_k = k delta in [0, sup_length], chosen with probability pi_k.
    const bool penalised = spec.mode == ConstantMode::piterbarg || spec.mode == ConstantMode::sup_const;
    log_pi_.resize(sup_steps_ + 1);
    double mx = -INFINITY;
    for (std::size_t k = 0; k <= sup_steps_; ++k) {
      const double tau = static_cast<double>(k) * d;
      log_pi_[k] = penalised ? -spec.b1 * std::pow(tau, spec.alpha) : 0.0;
      mx = std::max(mx, log_pi_[k]);
    }
    double s = 0.0;
    for (double lp : log_pi_) s += std::exp(lp - mx);
    const double lz = mx + std::log(s);
    cdf_.resize(log_pi_.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < log_pi_.size(); ++k) {
      log_pi_[k] -= lz;
      acc += std::exp(log_pi_[k]);
      cdf_[k] = acc;
    }
    tau_pow_.resize(sup_steps_ + 1);
    for (std::size_t k = 0; k <= sup_steps_; ++k) tau_pow_[k] = std::pow(static_cast<double>(k) * d, spec.alpha);
    abs_pow_.resize(grid_.size());
    for (std::size_t j = 0; j < grid_.size(); ++j) abs_pow_[j] = std::pow(static_cast<double>(j) * d, spec.alpha);
  }

  /// Draws one replicate; fills sqrt2 B on x_j = (j - tmax_steps) delta and returns -log M,
  /// or 0 for the untilted inf_const mode.
  double draw(PathRng& rng) {
    const bool tilted = spec_.mode != ConstantMode::inf_const;
    std::size_t k = 0;
    if (tilted) {
      const double v = open_uniform(rng) * cdf_.back();
      k = static_cast<std::size_t>(std::lower_bound(cdf_.begin(), cdf_.end(), v) - cdf_.begin());
      k = std::min(k, cdf_.size() - 1);
      while (k > 0 && std::isinf(log_pi_[k])) --k;
    }
    sample_path(sampler_, rng, buf_);
    const double anchor = buf_[tmax_steps_];
    const std::size_t m = grid_.size();
    for (std::size_t j = 0; j < m; ++j) sqrt2_b_[j] = std::numbers::sqrt2 * (buf_[j] - anchor);
    if (!tilted) return 0.0;
    // Mean shift |x|^a + tau^a - |x - tau|^a for tau = tau_k.
    const std::size_t tk = tmax_steps_ + k;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t dx0 = j > tmax_steps_ ? j - tmax_steps_ : tmax_steps_ - j;
      const std::size_t dxt = j > tk ? j - tk : tk - j;
      sqrt2_b_[j] += abs_pow_[dx0] + tau_pow_[k] - abs_pow_[dxt];
    }
    // log M = log sum_k pi_k exp(sqrt2 B(tau_k) - tau_k^a).
    double mx = -INFINITY;
    for (std::size_t i = 0; i <= sup_steps_; ++i)
      mx = std::max(mx, log_pi_[i] + sqrt2_b_[tmax_steps_ + i] - tau_pow_[i]);
    double s = 0.0;
    for (std::size_t i = 0; i <= sup_steps_; ++i)
      s += std::exp(log_pi_[i] + sqrt2_b_[tmax_steps_ + i] - tau_pow_[i] - mx);
    return -(mx + std::log(s));
  }

  /// Functional with inner window T (<= T_max) on the last drawn path.
  double functional(double T) {
    const double d = spec_.grid_step;
    const std::size_t w = static_cast<std::size_t>(std::llround(T / d));
    const std::size_t off = tmax_steps_ - w;
    if (spec_.mode == ConstantMode::inf_const || spec_.mode == ConstantMode::sup_const) {
      const bool inf = spec_.mode == ConstantMode::inf_const;
      double best = inf ? INFINITY : -INFINITY;
      for (std::size_t k = 0; k <= sup_steps_; ++k) {
        const double v = sqrt2_b_[tmax_steps_ + k] - detail::penalty(spec_, static_cast<double>(k) * d);
        best = inf ? std::min(best, v) : std::max(best, v);
      }
      return best;
    }
    for (std::size_t j = 0; j < grid_.size(); ++j)
      g_[j] = sqrt2_b_[j] - detail::penalty(spec_, (static_cast<double>(j) - static_cast<double>(tmax_steps_)) * d);
    return sm_.sup_inf(g_, grid_, 0.0, {off, off + sup_steps_, w});
  }

  const TimeGrid& grid() const { return grid_; }

 private:
  FunctionalSpec spec_;
  std::size_t tmax_steps_ = 0;
  std::size_t sup_steps_ = 0;
  TimeGrid grid_;
  GaussianSampler sampler_ = BrownianSampler(TimeGrid{});
  std::vector<double> log_pi_, cdf_, tau_pow_, abs_pow_;
  std::vector<double> buf_, sqrt2_b_, g_;
  SlidingMin sm_;
};

}  // namespace detail

/// Estimates E exp(F) for each inner window in Ts from one set of paths, so
/// the estimates share random numbers (monotone in T replicate by replicate).
inline std::vector<ConstantEstimate> estimate_constant_family(const FunctionalSpec& spec, std::span<const double> Ts,
                                                              std::size_t n, std::uint64_t seed,
                                                              const ParallelOptions& par = {}) {
  if (Ts.empty()) throw std::invalid_argument("estimate_constant_family: need at least one T");
  if (n < 2) throw std::invalid_argument("estimate_constant: need n >= 2");
  const bool family_mode = spec.mode == ConstantMode::pickands || spec.mode == ConstantMode::piterbarg;
  double T_max = 0.0;
  for (double T : Ts) {
    FunctionalSpec s = spec;
    s.T = T;
    s.validate();
    T_max = std::max(T_max, T);
  }
  if (!family_mode && Ts.size() != 1)
    throw std::invalid_argument("estimate_constant_family: inf_const / sup_const take a single T");

  std::vector<ConstantEstimate> out(Ts.size());
  for (std::size_t j = 0; j < Ts.size(); ++j) {
    out[j].n = n;
    out[j].T = Ts[j];
    out[j].lambda = family_mode ? spec.lambda : 0.0;
    out[j].grid_step = spec.grid_step;
  }
  if (!family_mode && Ts[0] == 0.0) {
    out[0].value = 1.0;  // the range [0,0] holds the single value 0
    return out;
  }

  FunctionalSpec base = spec;
  base.T = family_mode ? T_max : Ts[0];
  const double tilt_window = family_mode ? T_max : 0.0;
  const detail::ConstantSampler proto(base, tilt_window);
  const std::size_t nT = Ts.size();
  std::vector<double> vals(n * nT);
  for_each_index(n, par, [&] {
    return [&, s = proto](std::size_t i) mutable {
      auto rng = path_rng(seed, i);
      const double neg_log_m = s.draw(rng);
      for (std::size_t j = 0; j < nT; ++j) vals[j * n + i] = std::exp(s.functional(family_mode ? Ts[j] : 0.0) + neg_log_m);
    };
  });
  for (std::size_t j = 0; j < nT; ++j) {
    const auto ms = mean_se(std::span<const double>(vals.data() + j * n, n));
    out[j].value = ms.mean;
    out[j].stderr = ms.se;
  }
  return out;
}

/// Raw estimate of E exp(F): F_alpha(lambda,T) in pickands mode (not divided by lambda).
inline ConstantEstimate estimate_constant(const FunctionalSpec& spec, std::size_t n, std::uint64_t seed,
                                          const ParallelOptions& par = {}) {
  const double T = spec.T;
  return estimate_constant_family(spec, std::span<const double>(&T, 1), n, seed, par)[0];
}

/// Slope of a weighted least-squares line raw(lambda) ~ a + H lambda.
inline ConstantEstimate extrapolate_pickands(std::span<const LambdaPoint> pts) {
  std::vector<double> lam, raw, w;
  for (const auto& p : pts) {
    if (std::find(lam.begin(), lam.end(), p.lambda) == lam.end()) lam.push_back(p.lambda);
  }
  if (lam.size() < 3) throw std::invalid_argument("extrapolate_pickands: need at least 3 distinct lambda values");
  lam.clear();
  bool any_zero = false;
  for (const auto& p : pts) any_zero = any_zero || !(p.stderr > 0);
  for (const auto& p : pts) {
    lam.push_back(p.lambda);
    raw.push_back(p.raw);
    w.push_back(any_zero ? 1.0 : 1.0 / (p.stderr * p.stderr));
  }
  const auto fit = weighted_line_fit(lam, raw, w);
  if (fit.slope < 0) {
    std::ostringstream os;
    os << "extrapolate_pickands: fitted slope " << fit.slope << " is negative";
    throw std::runtime_error(os.str());
  }
  ConstantEstimate e;
  e.value = fit.slope;
  e.stderr = any_zero ? 0.0 : fit.se_slope;
  e.extrapolated = true;
  e.diagnostics.assign(pts.begin(), pts.end());
  e.lambda = *std::max_element(lam.begin(), lam.end());
  double envelope = INFINITY;
  for (const auto& p : pts) envelope = std::min(envelope, p.raw_over_lambda() + 3 * p.stderr / p.lambda);
  if (e.value > envelope) {
    std::ostringstream os;
    os << "slope " << e.value << " exceeds min raw/lambda + 3 stderr = " << envelope << " (negative intercept)";
    e.notes.push_back(os.str());
  }
  return e;
}

/// Piterbarg-type constants converge in lambda without a slope; the largest-lambda estimate is final.
inline ConstantEstimate finalize_piterbarg(std::span<const LambdaPoint> pts) {
  if (pts.empty()) throw std::invalid_argument("finalize_piterbarg: no estimates");
  const auto it = std::max_element(pts.begin(), pts.end(),
                                   [](const LambdaPoint& a, const LambdaPoint& b) { return a.lambda < b.lambda; });
  ConstantEstimate e;
  e.value = it->raw;
  e.stderr = it->stderr;
  e.lambda = it->lambda;
  e.extrapolated = true;
  e.diagnostics.assign(pts.begin(), pts.end());
  return e;
}

inline constexpr double kDefaultLambdas[] = {5.0, 10.0, 20.0};

/// Runs the lambda ladder (independent seeds per rung) and extrapolates.
inline ConstantEstimate estimate_constant_ladder(FunctionalSpec spec, std::span<const double> lambdas, std::size_t n,
                                                 std::uint64_t seed, const ParallelOptions& par = {}) {
  if (spec.mode != ConstantMode::pickands && spec.mode != ConstantMode::piterbarg)
    throw std::invalid_argument("estimate_constant_ladder: pickands or piterbarg mode only");
  std::vector<LambdaPoint> pts;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    spec.lambda = lambdas[i];
    const auto e = estimate_constant(spec, n, derive_seed(seed, i + 1), par);
    pts.push_back({lambdas[i], e.value, e.stderr});
  }
  auto out = spec.mode == ConstantMode::pickands ? extrapolate_pickands(pts) : finalize_piterbarg(pts);
  out.n = n;
  out.T = spec.T;
  out.grid_step = spec.grid_step;
  return out;
}

}  // namespace parisian
