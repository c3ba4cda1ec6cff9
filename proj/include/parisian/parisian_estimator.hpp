#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "parisian/diagnostics.hpp"
#include "parisian/gaussian_paths.hpp"
#include "parisian/grid.hpp"
#include "parisian/models.hpp"
#include "parisian/rng.hpp"
#include "parisian/stats.hpp"

namespace parisian {

/// Parisian window rule: T_u = T, or T_u = T u^{-kappa}.
struct Window {
  enum class Rule { constant, scaled };
  Rule rule = Rule::constant;
  double T = 0.0;
  double kappa = 0.0;

  static Window constant(double T) { return {Rule::constant, T, 0.0}; }
  static Window scaled(double T, double kappa) { return {Rule::scaled, T, kappa}; }

  double length_at(double u) const {
    if (rule == Rule::constant) return T;
    if (!(u > 0)) throw std::invalid_argument("Window: scaled rule needs u > 0");
    return T * std::pow(u, -kappa);
  }

  void validate() const {
    if (!(T >= 0) || !std::isfinite(T)) throw std::invalid_argument("Window: T must be finite and >= 0");
    if (rule == Rule::scaled && !(kappa > 0)) throw std::invalid_argument("Window: scaled rule needs kappa > 0");
  }
};

struct RuinProblem {
  GaussianModel model = GaussianModel::brownian();
  double c = 1.0;
  double S = 1.0;
  double u = 0.0;
  Window window;
  /// Earliest admissible window start. 0 gives Parisian ruin on [0,S];
  /// ruin_from = S with a constant window gives P(inf_{[S,S+T]}(X-ct) > u).
  double ruin_from = 0.0;

  double window_length() const { return window.length_at(u); }

  void validate() const {
    if (!(c > 0)) throw std::invalid_argument("RuinProblem: c must be > 0");
    if (!(S > 0)) throw std::invalid_argument("RuinProblem: S must be > 0");
    if (!(u >= 0)) throw std::invalid_argument("RuinProblem: u must be >= 0");
    if (!(ruin_from >= 0 && ruin_from <= S)) throw std::invalid_argument("RuinProblem: ruin_from must lie in [0,S]");
    window.validate();
  }
};

struct MCConfig {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 1;
  double grid_step = 1e-3;
  bool importance_sampling = false;
  std::size_t batch_size = 4096;
  std::size_t workers = 0;  ///< 0 = all cores
  bool step_halving = true;
  std::optional<double> tilt;  ///< overrides the default IS shift

  ParallelOptions parallel() const { return {workers, batch_size}; }

  void validate(double S, double T_u) const {
    if (n_paths < 100) throw std::invalid_argument("MCConfig: n_paths must be >= 100");
    if (!(grid_step > 0) || !std::isfinite(grid_step)) throw std::invalid_argument("MCConfig: grid_step must be > 0");
    if (batch_size == 0) throw std::invalid_argument("MCConfig: batch_size must be > 0");
    const double lim = (T_u > 0 ? std::min(S, T_u) : S) / 4;
    if (grid_step > lim * (1 + 1e-12)) {
      std::ostringstream os;
      os << "MCConfig: grid_step " << grid_step << " exceeds min(S, T_u)/4 = " << lim;
      throw std::invalid_argument(os.str());
    }
  }
};

/// Re-estimate at half the grid step under a derived seed.
struct StepHalving {
  double grid_step = 0.0;
  double p_hat = 0.0;
  double stderr = 0.0;
  double shift = 0.0;         ///< p(step/2) - p(step)
  double joint_stderr = 0.0;
  double bias_bound = 0.0;    ///< |shift| / (1 - 2^{-r}), r the roughness rate
  bool flagged = false;       ///< |shift| > 2 joint_stderr
};

struct MCEstimate {
  double p_hat = 0.0;
  double stderr = 0.0;
  std::size_t n = 0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double ess = 0.0;
  double grid_step = 0.0;
  std::size_t hits = 0;
  bool weighted = false;
  double tilt = 0.0;
  double window = 0.0;
  std::optional<StepHalving> halving;
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// Functional evaluation.

/// Window starts first..last (grid indices), each window spanning `width` steps.
struct WindowGeometry {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t width = 0;
};

inline WindowGeometry window_geometry(const TimeGrid& grid, double S, double T, double t_from = 0.0) {
  if (!(T >= 0)) throw std::invalid_argument("window_geometry: T must be >= 0");
  if (grid.end() < S + T - 1e-9 * std::max(1.0, S + T)) {
    std::ostringstream os;
    os << "grid ends at " << grid.end() << " and does not cover S+T = " << S + T;
    throw std::invalid_argument(os.str());
  }
  const auto first = grid.index_of(t_from);
  const auto last = grid.index_of(S);
  const auto width = grid.steps_in(T);
  if (!first) throw std::invalid_argument("window_geometry: start time is not a grid point");
  if (!last) throw std::invalid_argument("window_geometry: S is not a grid point");
  if (!width) throw std::invalid_argument("window_geometry: T is not an integer multiple of the grid step");
  if (*first > *last) throw std::invalid_argument("window_geometry: start time after S");
  return {*first, *last, *width};
}

/// Sliding-window minimum of Y(s) = X(s) - c s, reusing its index buffer.
class SlidingMin {
 public:
  /// max over window starts i of min_{k in [i, i+width]} Y(k)
  double sup_inf(std::span<const double> x, const TimeGrid& grid, double c, const WindowGeometry& g) {
    double best = -std::numeric_limits<double>::infinity();
    scan(x, grid, c, g, [&](std::size_t, double m) {
      if (m > best) best = m;
      return false;
    });
    return best;
  }

  /// First window start whose window minimum exceeds u.
  std::optional<std::size_t> first_exceedance(std::span<const double> x, const TimeGrid& grid, double c,
                                              const WindowGeometry& g, double u) {
    std::optional<std::size_t> hit;
    scan(x, grid, c, g, [&](std::size_t i, double m) {
      if (m > u) {
        hit = i;
        return true;
      }
      return false;
    });
    return hit;
  }

 private:
  template <class Visit>
  void scan(std::span<const double> x, const TimeGrid& grid, double c, const WindowGeometry& g, Visit&& visit) {
    const std::size_t end = g.last + g.width;
    const std::size_t len = end - g.first + 1;
    if (idx_.size() < len) {
      idx_.resize(len);
      val_.resize(len);
    }
    std::size_t head = 0, tail = 0;
    for (std::size_t k = g.first; k <= end; ++k) {
      const double y = x[k] - c * grid[k];
      while (tail > head && val_[tail - 1] >= y) --tail;
      idx_[tail] = k;
      val_[tail] = y;
      ++tail;
      if (k >= g.first + g.width) {
        const std::size_t i = k - g.width;
        while (idx_[head] < i) ++head;
        if (visit(i, val_[head])) return;
      }
    }
  }

  std::vector<std::size_t> idx_;
  std::vector<double> val_;
};

/// sup_{t in [t_from,S]} min_{s in [t,t+T]} (X(s) - c s) on the grid.
inline double parisian_functional(std::span<const double> path, const TimeGrid& grid, double c, double S, double T,
                                  double t_from = 0.0) {
  if (path.size() != grid.size()) throw std::invalid_argument("parisian_functional: path length differs from grid");
  SlidingMin sm;
  return sm.sup_inf(path, grid, c, window_geometry(grid, S, T, t_from));
}

/// Ruin indicator in the risk-process form: inf_t sup_{s in [t,t+T]} (u + c s - X(s)) < 0.
inline bool parisian_ruin_by_surplus(std::span<const double> path, const TimeGrid& grid, double u, double c, double S,
                                     double T) {
  const auto g = window_geometry(grid, S, T);
  double inf_sup = std::numeric_limits<double>::infinity();
  for (std::size_t i = g.first; i <= g.last; ++i) {
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t k = i; k <= i + g.width; ++k) sup = std::max(sup, u + c * grid[k] - path[k]);
    inf_sup = std::min(inf_sup, sup);
  }
  return inf_sup < 0;
}

// ---------------------------------------------------------------------------
// Monte Carlo drivers.

/// Per-path functional values and log-weights (empty when unweighted).
struct FunctionalSample {
  std::vector<double> value;
  std::vector<double> log_weight;
  double grid_step = 0.0;

  std::size_t size() const { return value.size(); }
  bool weighted() const { return !log_weight.empty(); }
};

template <class Sampler>
FunctionalSample sample_functional(const Sampler& proto, double c, const WindowGeometry& geom, std::size_t n,
                                   std::uint64_t seed, bool weighted, const ParallelOptions& par) {
  FunctionalSample out;
  out.value.assign(n, 0.0);
  if (weighted) out.log_weight.assign(n, 0.0);
  const TimeGrid& grid = proto.grid();
  out.grid_step = grid.step();
  for_each_index(n, par, [&] {
    return [&, s = proto, buf = std::vector<double>(grid.size()), sm = SlidingMin()](std::size_t i) mutable {
      auto rng = path_rng(seed, i);
      const double lw = s.sample(rng, buf);
      out.value[i] = sm.sup_inf(buf, grid, c, geom);
      if (weighted) out.log_weight[i] = lw;
    };
  });
  return out;
}

/// Turns per-path functionals into an estimate of P(functional > u).
inline MCEstimate summarize_exceedance(const FunctionalSample& fs, double u) {
  MCEstimate e;
  const std::size_t n = fs.size();
  e.n = n;
  e.grid_step = fs.grid_step;
  e.weighted = fs.weighted();
  for (std::size_t i = 0; i < n; ++i)
    if (fs.value[i] > u) ++e.hits;
  if (!e.weighted) {
    const double p = static_cast<double>(e.hits) / static_cast<double>(n);
    e.p_hat = p;
    e.stderr = std::sqrt(p * (1 - p) / static_cast<double>(n));
    e.ess = static_cast<double>(n);
    if (e.hits == 0) {
      e.ci_lo = 0.0;
      e.ci_hi = std::min(1.0, 3.0 / static_cast<double>(n));
    } else {
      const auto ci = wilson_interval(e.hits, n);
      e.ci_lo = std::min(ci.lo, p);
      e.ci_hi = std::max(ci.hi, p);
    }
    return e;
  }
  std::vector<double> y(n, 0.0);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (fs.value[i] > u) {
      y[i] = std::exp(fs.log_weight[i]);
      s1 += y[i];
      s2 += y[i] * y[i];
    }
  }
  const auto ms = mean_se(y);
  e.p_hat = std::min(ms.mean, 1.0);
  e.stderr = ms.se;
  e.ess = s2 > 0 ? std::min(s1 * s1 / s2, static_cast<double>(n)) : 0.0;
  if (e.hits == 0) {
    e.ci_lo = 0.0;
    e.ci_hi = 0.0;
    e.notes.push_back("no paths reached the ruin set");
  } else {
    const auto ci = clamp_unit(e.p_hat, kZ95 * e.stderr);
    e.ci_lo = ci.lo;
    e.ci_hi = ci.hi;
  }
  if (e.ess < 0.01 * static_cast<double>(n)) {
    std::ostringstream os;
    os << "effective sample size " << e.ess << " below 1% of n; the tilt may not match the ruin set";
    e.notes.push_back(os.str());
    log_notice(os.str());
  }
  return e;
}

inline StepHalving compare_halving(const MCEstimate& base, const MCEstimate& half, double roughness) {
  StepHalving h;
  h.grid_step = half.grid_step;
  h.p_hat = half.p_hat;
  h.stderr = half.stderr;
  h.shift = half.p_hat - base.p_hat;
  h.joint_stderr = std::hypot(base.stderr, half.stderr);
  h.bias_bound = std::abs(h.shift) / (1 - std::pow(2.0, -roughness));
  h.flagged = std::abs(h.shift) > 2 * h.joint_stderr;
  return h;
}

namespace detail {

inline constexpr std::uint64_t kHalvingTag = 0x68616c76ull;

struct ResolvedProblem {
  double T_u = 0.0;
  TimeGrid grid;
  WindowGeometry geom;
};

inline ResolvedProblem resolve(const RuinProblem& p, double step, std::vector<std::string>* notes) {
  ResolvedProblem r;
  r.T_u = p.window_length();
  const double end = p.S + r.T_u;
  r.grid = make_grid(0.0, end, step);
  r.geom = window_geometry(r.grid, p.S, r.T_u, p.ruin_from);
  if (notes && r.T_u > p.S) {
    std::ostringstream os;
    os << "window length " << r.T_u << " exceeds the horizon " << p.S;
    notes->push_back(os.str());
    log_notice(os.str());
  }
  return r;
}

inline double default_tilt(const RuinProblem& p) { return (p.u + p.c * p.S) / p.model.variance(p.S); }

inline FunctionalSample run_plain(const RuinProblem& p, const MCConfig& cfg, double step, std::uint64_t seed) {
  const auto r = resolve(p, step, nullptr);
  VariantSampler s{make_path_sampler(p.model, r.grid)};
  return sample_functional(s, p.c, r.geom, cfg.n_paths, seed, false, cfg.parallel());
}

inline FunctionalSample run_tilted(const RuinProblem& p, const MCConfig& cfg, double step, std::uint64_t seed,
                                   double a) {
  const auto r = resolve(p, step, nullptr);
  const auto anchor = r.grid.index_of(p.S);
  TiltedSampler s(make_path_sampler(p.model, r.grid), p.model, *anchor, a);
  return sample_functional(s, p.c, r.geom, cfg.n_paths, seed, true, cfg.parallel());
}

}  // namespace detail

/// Plain Monte Carlo estimate of the Parisian ruin probability.
inline MCEstimate estimate_parisian_mc(const RuinProblem& problem, const MCConfig& config) {
  problem.validate();
  std::vector<std::string> notes;
  const auto r = detail::resolve(problem, config.grid_step, &notes);
  config.validate(problem.S, r.T_u);
  auto est = summarize_exceedance(detail::run_plain(problem, config, config.grid_step, config.seed), problem.u);
  est.window = r.T_u;
  est.notes.insert(est.notes.begin(), notes.begin(), notes.end());
  if (config.step_halving) {
    const double half = config.grid_step / 2;
    auto h = summarize_exceedance(
        detail::run_plain(problem, config, half, derive_seed(config.seed, detail::kHalvingTag)), problem.u);
    est.halving = compare_halving(est, h, problem.model.roughness_rate());
  }
  return est;
}

/// Plain Monte Carlo over a u-ladder from one pass (constant windows only).
inline std::vector<MCEstimate> estimate_parisian_mc_ladder(const RuinProblem& problem, const MCConfig& config,
                                                           std::span<const double> us) {
  problem.validate();
  if (problem.window.rule != Window::Rule::constant)
    throw std::invalid_argument("estimate_parisian_mc_ladder: needs a constant window");
  std::vector<std::string> notes;
  const auto r = detail::resolve(problem, config.grid_step, &notes);
  config.validate(problem.S, r.T_u);
  const auto fs = detail::run_plain(problem, config, config.grid_step, config.seed);
  std::optional<FunctionalSample> fh;
  if (config.step_halving)
    fh = detail::run_plain(problem, config, config.grid_step / 2, derive_seed(config.seed, detail::kHalvingTag));
  std::vector<MCEstimate> out;
  for (double u : us) {
    auto e = summarize_exceedance(fs, u);
    e.window = r.T_u;
    e.notes.insert(e.notes.begin(), notes.begin(), notes.end());
    if (fh) e.halving = compare_halving(e, summarize_exceedance(*fh, u), problem.model.roughness_rate());
    out.push_back(std::move(e));
  }
  return out;
}

/// Importance-sampled estimate with the mean shift a r(t,S), a = (u+cS)/sigma^2(S).
inline MCEstimate estimate_parisian_is(const RuinProblem& problem, const MCConfig& config) {
  problem.validate();
  std::vector<std::string> notes;
  const auto r = detail::resolve(problem, config.grid_step, &notes);
  config.validate(problem.S, r.T_u);
  const double a = config.tilt.value_or(detail::default_tilt(problem));
  auto est =
      summarize_exceedance(detail::run_tilted(problem, config, config.grid_step, config.seed, a), problem.u);
  est.tilt = a;
  est.window = r.T_u;
  est.notes.insert(est.notes.begin(), notes.begin(), notes.end());
  if (config.step_halving) {
    const double half = config.grid_step / 2;
    auto h = summarize_exceedance(
        detail::run_tilted(problem, config, half, derive_seed(config.seed, detail::kHalvingTag), a), problem.u);
    est.halving = compare_halving(est, h, problem.model.roughness_rate());
  }
  return est;
}

/// Dispatches on config.importance_sampling.
inline MCEstimate estimate_parisian(const RuinProblem& problem, const MCConfig& config) {
  return config.importance_sampling ? estimate_parisian_is(problem, config) : estimate_parisian_mc(problem, config);
}

// ---------------------------------------------------------------------------
// Ruin-time law.

struct RuinTimeLaw {
  std::vector<double> x;
  std::vector<double> cdf;
  std::vector<double> stderr;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  std::size_t ruin_events = 0;
  double ess = 0.0;
  double p_ruin = 0.0;  ///< estimate of P(tau_u < S)
  double window = 0.0;
  double grid_step = 0.0;
  bool weighted = false;
};

/// Empirical law of u^2 (S - tau_u) given tau_u < S, where tau_u is the first
/// time a window of length T_u lies entirely in the ruin set.
inline RuinTimeLaw estimate_ruin_time_law(const RuinProblem& problem, const MCConfig& config,
                                          std::span<const double> x_grid) {
  problem.validate();
  if (problem.model.kind() == ModelKind::stationary_increments)
    throw std::invalid_argument("estimate_ruin_time_law: model must be Brownian or fractional Brownian motion");
  if (!(problem.u > 0)) throw std::invalid_argument("estimate_ruin_time_law: u must be > 0");
  const double T_u = problem.window_length();
  config.validate(problem.S, T_u);
  const TimeGrid grid = make_grid(0.0, problem.S, config.grid_step);
  const auto width = grid.steps_in(T_u);
  if (!width) throw std::invalid_argument("estimate_ruin_time_law: T_u is not an integer multiple of the grid step");
  if (*width >= grid.intervals()) throw std::invalid_argument("estimate_ruin_time_law: T_u must be shorter than S");
  WindowGeometry geom{0, grid.intervals() - *width, *width};

  const bool weighted = config.importance_sampling;
  const double a = weighted ? config.tilt.value_or(detail::default_tilt(problem)) : 0.0;
  const std::size_t n = config.n_paths;
  std::vector<double> scaled(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> lw(n, 0.0);

  auto run = [&](auto proto) {
    for_each_index(n, config.parallel(), [&] {
      return [&, s = proto, buf = std::vector<double>(grid.size()), sm = SlidingMin()](std::size_t i) mutable {
        auto rng = path_rng(config.seed, i);
        lw[i] = s.sample(rng, buf);
        if (auto start = sm.first_exceedance(buf, grid, problem.c, geom, problem.u)) {
          const double tau = grid[*start + geom.width];
          scaled[i] = problem.u * problem.u * (problem.S - tau);
        }
      };
    });
  };
  if (weighted) {
    run(TiltedSampler(make_path_sampler(problem.model, grid), problem.model, grid.intervals(), a));
  } else {
    run(VariantSampler{make_path_sampler(problem.model, grid)});
  }

  RuinTimeLaw law;
  law.window = T_u;
  law.grid_step = grid.step();
  law.weighted = weighted;
  std::vector<double> w(n, 0.0);
  double sw = 0.0, sw2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(scaled[i])) continue;
    ++law.ruin_events;
    w[i] = weighted ? std::exp(lw[i]) : 1.0;
    sw += w[i];
    sw2 += w[i] * w[i];
  }
  if (law.ruin_events == 0)
    throw std::runtime_error("estimate_ruin_time_law: no ruin events observed; raise n or enable importance sampling");
  law.ess = sw * sw / sw2;
  law.p_ruin = sw / static_cast<double>(n);

  // Ratio estimator F(x) = sum w 1{ruin, y<=x} / sum w 1{ruin}, delta-method stderr.
  const double nn = static_cast<double>(n);
  for (double x : x_grid) {
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isnan(scaled[i]) && scaled[i] <= x) num += w[i];
    const double F = num / sw;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(scaled[i])) continue;
      const double r = w[i] * ((scaled[i] <= x ? 1.0 : 0.0) - F);
      var += r * r;
    }
    const double mean_d = sw / nn;
    const double se = std::sqrt(var / (nn * (nn - 1))) / mean_d;
    const auto ci = clamp_unit(F, kZ95 * se);
    law.x.push_back(x);
    law.cdf.push_back(F);
    law.stderr.push_back(se);
    law.ci_lo.push_back(ci.lo);
    law.ci_hi.push_back(ci.hi);
  }
  return law;
}

}  // namespace parisian
