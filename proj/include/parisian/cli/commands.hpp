#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "parisian/asymptotics.hpp"
#include "parisian/cli/run_record.hpp"
#include "parisian/constants_lab.hpp"
#include "parisian/diagnostics.hpp"
#include "parisian/models.hpp"
#include "parisian/parisian_estimator.hpp"
#include "parisian/stable_sim.hpp"

namespace parisian::cli {

inline constexpr const char* kOutDirEnv = "PARISIAN_OUT_DIR";
inline constexpr const char* kDefaultOutDir = "runs";
inline const std::vector<std::string> kCommands = {"simulate", "asympt", "constants", "compare", "stable"};

/// Command-line values that take precedence over the configuration document.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  std::optional<double> grid_step;
  std::optional<std::size_t> n_paths;
};

// ---------------------------------------------------------------------------
// Config access. Missing optional keys are filled in so the stored config is
// the fully resolved one.

[[noreturn]] inline void malformed(const std::string& what) { throw CliError(exit_malformed_config, what); }

inline json& section(json& j, const char* key) {
  if (!j.contains(key)) j[key] = json::object();
  if (!j[key].is_object()) malformed(std::string("'") + key + "' must be an object");
  return j[key];
}

template <class T>
T take(json& j, const char* key, T def) {
  if (!j.contains(key) || j[key].is_null()) {
    j[key] = def;
    return def;
  }
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    malformed(std::string("bad value for '") + key + "'");
  }
}

template <class T>
T need(json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) malformed(std::string("missing required key '") + key + "'");
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    malformed(std::string("bad value for '") + key + "'");
  }
}

inline std::vector<double> number_list(json& j, const char* key) {
  if (!j.contains(key)) malformed(std::string("missing required key '") + key + "'");
  const json& v = j[key];
  try {
    if (v.is_number()) return {v.get<double>()};
    if (v.is_array() && !v.empty()) return v.get<std::vector<double>>();
  } catch (const json::exception&) {
  }
  malformed(std::string("'") + key + "' must be a number or a non-empty list of numbers");
}

inline GaussianModel parse_model(json& j) {
  const auto kind = take<std::string>(j, "kind", "bm");
  if (kind == "bm") return GaussianModel::brownian();
  if (kind == "fbm") {
    const double alpha = need<double>(j, "alpha");
    auto m = GaussianModel::fbm(alpha);
    return m;
  }
  if (kind == "stationary_increments") {
    if (j.contains("power")) {
      json& p = section(j, "power");
      const double scale = take<double>(p, "scale", 1.0);
      const double e = need<double>(p, "exponent");
      if (!(scale > 0 && e > 0 && e <= 2)) malformed("power variance needs scale > 0 and exponent in (0,2]");
      return GaussianModel::stationary_increments(
          [=](double t) { return scale * std::pow(std::abs(t), e); },
          [=](double t) { return scale * e * std::pow(t, e - 1); }, "si-power");
    }
    if (j.contains("poly")) {
      const auto a = need<std::vector<double>>(j, "poly");
      if (a.empty()) malformed("'poly' needs at least one coefficient");
      auto V = [a](double t) {
        t = std::abs(t);
        double s = 0.0, p = t;
        for (double c : a) {
          s += c * p;
          p *= t;
        }
        return s;
      };
      auto dV = [a](double t) {
        double s = 0.0, p = 1.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
          s += static_cast<double>(k + 1) * a[k] * p;
          p *= t;
        }
        return s;
      };
      return GaussianModel::stationary_increments(V, dV, "si-poly");
    }
    malformed("stationary_increments needs 'power' or 'poly'");
  }
  malformed("unknown model kind '" + kind + "'");
}

inline Window parse_window(json& j) {
  const auto rule = take<std::string>(j, "rule", "constant");
  const double T = take<double>(j, "T", 0.0);
  if (rule == "constant") return Window::constant(T);
  if (rule == "scaled") return Window::scaled(T, need<double>(j, "kappa"));
  malformed("window rule must be 'constant' or 'scaled'");
}

inline MCConfig parse_mc(json& cfg, double default_step = 1e-3) {
  json& j = section(cfg, "mc");
  MCConfig m;
  m.n_paths = take<std::size_t>(j, "n_paths", 100000);
  m.grid_step = take<double>(j, "grid_step", default_step);
  m.importance_sampling = take<bool>(j, "importance_sampling", false);
  m.batch_size = take<std::size_t>(j, "batch_size", 4096);
  m.step_halving = take<bool>(j, "step_halving", true);
  if (j.contains("tilt") && !j["tilt"].is_null()) m.tilt = need<double>(j, "tilt");
  m.seed = take<std::uint64_t>(cfg, "seed", 1);
  m.workers = take<std::size_t>(cfg, "workers", 0);
  return m;
}

/// T_u rounded to the nearest multiple of the grid step.
inline double aligned_window(double T_u, double step) {
  const double k = std::round(T_u / step);
  const double r = k * step;
  if (T_u > 0 && k == 0) {
    std::ostringstream os;
    os << "window length " << T_u << " is below half a grid step " << step;
    malformed(os.str());
  }
  if (std::abs(r - T_u) > 1e-12 * std::max(1.0, T_u)) {
    std::ostringstream os;
    os.precision(17);
    os << "window length " << T_u << " rounded to " << r << " (multiple of grid step " << step << ")";
    log_notice(os.str());
  }
  return r;
}

inline std::vector<std::optional<double>> ratio_row(double u, std::optional<double> p_mc, std::optional<double> se,
                                                    std::optional<double> p_asy, std::optional<double> p_exact) {
  std::optional<double> ratio;
  const auto numer = p_exact ? p_exact : p_mc;
  if (numer && p_asy && *p_asy > 0) ratio = *numer / *p_asy;
  return {u, p_mc, se, p_asy, ratio, p_exact};
}

// ---------------------------------------------------------------------------
// Asymptotic regimes driven by a params object.

struct RegimeValue {
  std::optional<AsymptoticValue> asymptotic;
  std::optional<double> exact;
};

inline Regime require_regime(json& cfg) {
  const auto tag = need<std::string>(cfg, "regime");
  const auto r = parse_regime(tag);
  if (!r) throw CliError(exit_unknown_regime, "unknown regime '" + tag + "'");
  return *r;
}

inline LocalExpansion parse_local(json& p) {
  if (p.contains("model")) {
    json& m = section(p, "model");
    const auto kind = take<std::string>(m, "kind", "bm");
    const double S = need<double>(p, "S");
    if (kind == "bm") return LocalExpansion::for_fbm(1.0, S);
    if (kind == "fbm") return LocalExpansion::for_fbm(need<double>(m, "alpha"), S);
    malformed("local expansion can only be derived for bm or fbm; give 'local' explicitly");
  }
  json& l = section(p, "local");
  LocalExpansion le;
  le.sigma_S = need<double>(l, "sigma_S");
  le.A = need<double>(l, "A");
  le.A_pm = need<double>(l, "A_pm");
  le.beta1 = need<double>(l, "beta1");
  le.beta2 = need<double>(l, "beta2");
  le.D = need<double>(l, "D");
  le.alpha = need<double>(l, "alpha");
  return le;
}

inline std::optional<double> optional_number(json& p, const char* key) {
  if (!p.contains(key) || p[key].is_null()) {
    p[key] = nullptr;
    return std::nullopt;
  }
  return need<double>(p, key);
}

inline RegimeValue evaluate_regime(Regime regime, json& p, double u) {
  RegimeValue out;
  auto check = [&](const AsymptoticValue& v) {
    if (v.regime != regime)
      malformed("parameters select regime " + std::string(to_string(v.regime)) + ", not " +
                std::string(to_string(regime)));
    out.asymptotic = v;
  };
  switch (regime) {
    case Regime::thm21: {
      const double c = need<double>(p, "c"), T1 = need<double>(p, "T1"), T2 = need<double>(p, "T2");
      check(bm_inf_tail_asymptotic(c, T1, T2, u));
      out.exact = bm_inf_tail_exact(c, T1, T2, u);
      break;
    }
    case Regime::thm31_lower: {
      json& m = section(p, "model");
      check(lower_bound_thm31(parse_model(m), need<double>(p, "c"), need<double>(p, "S"), need<double>(p, "T"), u));
      break;
    }
    case Regime::thm32_log: break;
    case Regime::thm33_i:
    case Regime::thm33_ii:
    case Regime::thm33_iii: {
      const auto le = parse_local(p);
      json& w = section(p, "window");
      check(gauss_exact_asymptotic(le, need<double>(p, "c"), need<double>(p, "S"), u, parse_window(w),
                                   optional_number(p, "constant")));
      break;
    }
    case Regime::cor34_i:
    case Regime::cor34_ii:
    case Regime::cor34_iii: {
      json& w = section(p, "window");
      check(fbm_corollary_asymptotic(need<double>(p, "alpha"), need<double>(p, "c"), need<double>(p, "S"), u,
                                     parse_window(w), optional_number(p, "constant")));
      break;
    }
    case Regime::prop11_stable:
      check(levy_stable_asymptotic(need<double>(p, "alpha"), take<double>(p, "beta", 0.0), need<double>(p, "S"), u));
      break;
    case Regime::lemma41: {
      const auto ex = take<std::string>(p, "example", "half_normal");
      if (ex != "half_normal") malformed("lemma41 supports example 'half_normal' only");
      check(diff_tail_asymptotic(half_normal_difference_spec(), u));
      out.exact = half_normal_difference_tail(u);
      break;
    }
  }
  return out;
}

inline json log_rate_entry(json& p) {
  json& m = section(p, "model");
  const auto model = parse_model(m);
  const double S = need<double>(p, "S");
  const double r = log_rate(model, S);
  return {{"kind", "log_rate"},
          {"regime", "thm32_log"},
          {"S", S},
          {"rate", num(r)},
          {"displayed_rate", num(displayed_log_rate(model, S))},
          {"note", std::string(kLogRateNote)}};
}

// ---------------------------------------------------------------------------
// Monte Carlo front ends shared by simulate / stable / compare.

struct GaussianRun {
  GaussianModel model = GaussianModel::brownian();
  double c = 1, S = 1, ruin_from = 0;
  Window window;
  MCConfig mc;
};

struct McPoint {
  double u;
  MCEstimate estimate;
};

inline std::vector<McPoint> run_gaussian(const GaussianRun& g, const std::vector<double>& us) {
  std::vector<McPoint> out;
  const bool ladder = !g.mc.importance_sampling && g.window.rule == Window::Rule::constant && us.size() > 1;
  if (ladder) {
    RuinProblem p{g.model, g.c, g.S, us.front(), Window::constant(aligned_window(g.window.T, g.mc.grid_step)),
                  g.ruin_from};
    auto ests = estimate_parisian_mc_ladder(p, g.mc, us);
    for (std::size_t i = 0; i < us.size(); ++i) out.push_back({us[i], std::move(ests[i])});
    return out;
  }
  for (double u : us) {
    RuinProblem p{g.model, g.c, g.S, u, g.window, g.ruin_from};
    p.window = Window::constant(aligned_window(g.window.length_at(u), g.mc.grid_step));
    out.push_back({u, estimate_parisian(p, g.mc)});
  }
  return out;
}

inline std::optional<double> exact_for(const GaussianRun& g, double u, double T_u) {
  if (g.model.kind() != ModelKind::brownian_motion || !(u > 0)) return std::nullopt;
  if (T_u == 0 && g.ruin_from == 0) return bm_classical_ruin(g.c, g.S, u);
  if (T_u > 0 && g.ruin_from == g.S) return bm_inf_tail_exact(g.c, g.S, g.S + T_u, u);
  return std::nullopt;
}

inline std::optional<AsymptoticValue> asymptotic_for(const GaussianRun& g, double u, double T_u,
                                                     std::optional<double> constant) {
  if (!(u > 0)) return std::nullopt;
  const bool fbm_like = g.model.kind() != ModelKind::stationary_increments;
  const double alpha = g.model.kind() == ModelKind::brownian_motion ? 1.0 : g.model.alpha();
  if (g.model.kind() == ModelKind::brownian_motion && T_u > 0 && g.ruin_from == g.S)
    return bm_inf_tail_asymptotic(g.c, g.S, g.S + T_u, u);
  if (!fbm_like || g.ruin_from != 0) return std::nullopt;
  if (alpha <= 1 && !constant) return std::nullopt;
  return fbm_corollary_asymptotic(alpha, g.c, g.S, u, g.window, constant);
}

inline GaussianRun parse_gaussian_run(json& cfg) {
  GaussianRun g;
  g.model = parse_model(section(cfg, "model"));
  json& p = section(cfg, "problem");
  g.c = take<double>(p, "c", 1.0);
  g.S = take<double>(p, "S", 1.0);
  g.ruin_from = take<double>(p, "ruin_from", 0.0);
  g.window = parse_window(section(p, "window"));
  g.mc = parse_mc(cfg);
  return g;
}

// ---------------------------------------------------------------------------
// Commands. Each returns a record with the resolved config echoed.

inline RunRecord cmd_stable(json cfg);

inline RunRecord cmd_simulate(json cfg) {
  RunRecord rec;
  rec.command = "simulate";
  json& model = section(cfg, "model");
  if (model.value("kind", "") == "stable") {
    rec = cmd_stable(cfg);
    rec.command = "simulate";
    return rec;
  }
  const auto g = parse_gaussian_run(cfg);
  json& p = section(cfg, "problem");
  const auto us = number_list(p, "u");
  const auto constant = optional_number(p, "constant");
  rec.table.header = kRatioHeader;
  for (const auto& pt : run_gaussian(g, us)) {
    rec.results.push_back(to_json(pt.estimate, pt.u));
    const auto asy = asymptotic_for(g, pt.u, pt.estimate.window, constant);
    if (asy) rec.results.push_back(to_json(*asy));
    rec.table.rows.push_back(ratio_row(pt.u, pt.estimate.p_hat, pt.estimate.stderr,
                                       asy ? std::optional<double>(asy->value) : std::nullopt,
                                       exact_for(g, pt.u, pt.estimate.window)));
  }
  if (cfg.contains("ruin_time")) {
    json& rt = section(cfg, "ruin_time");
    const auto xs = number_list(rt, "x");
    for (double u : us) {
      RuinProblem prob{g.model, g.c, g.S, u, g.window, 0.0};
      prob.window = Window::constant(aligned_window(g.window.length_at(u), g.mc.grid_step));
      rec.results.push_back(to_json(estimate_ruin_time_law(prob, g.mc, xs), u));
    }
  }
  rec.config = cfg;
  return rec;
}

inline RunRecord cmd_stable(json cfg) {
  RunRecord rec;
  rec.command = "stable";
  json& m = section(cfg, cfg.contains("stable") ? "stable" : "model");
  StableSpec spec{take<double>(m, "alpha", 1.5), take<double>(m, "beta", 0.0)};
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    malformed(e.what());
  }
  json& p = section(cfg, "problem");
  const double c = take<double>(p, "c", 1.0);
  const double S = take<double>(p, "S", 1.0);
  json& w = section(p, "window");
  const auto window = parse_window(w);
  if (window.rule != Window::Rule::constant) malformed("stable runs need a constant (bounded) window");
  const bool sup = take<bool>(cfg, "sup", false);
  const auto us = number_list(p, "u");
  const auto mc = parse_mc(cfg, 1e-3 * S);
  const double T = sup ? 0.0 : aligned_window(window.T, mc.grid_step);
  const auto ests = sup ? estimate_stable_sup_ladder(spec, S, us, mc)
                        : estimate_parisian_stable_ladder(spec, c, S, us, T, mc);
  rec.table.header = kRatioHeader;
  for (std::size_t i = 0; i < us.size(); ++i) {
    rec.results.push_back(to_json(ests[i], us[i]));
    const auto asy = levy_stable_asymptotic(spec.alpha, spec.beta, S, us[i]);
    rec.results.push_back(to_json(asy));
    rec.table.rows.push_back(ratio_row(us[i], ests[i].p_hat, ests[i].stderr, asy.value, std::nullopt));
  }
  rec.config = cfg;
  return rec;
}

inline RunRecord cmd_asympt(json cfg) {
  RunRecord rec;
  rec.command = "asympt";
  const Regime regime = require_regime(cfg);
  json& p = section(cfg, "params");
  rec.table.header = kRatioHeader;
  if (regime == Regime::thm32_log) {
    rec.results.push_back(log_rate_entry(p));
    rec.config = cfg;
    return rec;
  }
  for (double u : number_list(cfg, "u")) {
    const auto v = evaluate_regime(regime, p, u);
    rec.results.push_back(to_json(*v.asymptotic));
    if (v.exact) rec.results.push_back({{"kind", "exact"}, {"u", u}, {"value", num(*v.exact)}});
    rec.table.rows.push_back(ratio_row(u, std::nullopt, std::nullopt, v.asymptotic->value, v.exact));
  }
  rec.config = cfg;
  return rec;
}

inline RunRecord cmd_compare(json cfg) {
  RunRecord rec;
  rec.command = "compare";
  const Regime regime = require_regime(cfg);
  json& p = section(cfg, "params");
  const auto us = number_list(cfg, "u");
  rec.table.header = kRatioHeader;
  if (regime == Regime::thm32_log) {
    rec.results.push_back(log_rate_entry(p));
    rec.config = cfg;
    return rec;
  }

  std::vector<std::optional<MCEstimate>> mc(us.size());
  if (cfg.contains("mc")) {
    const MCConfig m = parse_mc(cfg);
    std::optional<GaussianRun> g;
    switch (regime) {
      case Regime::thm21: {
        g.emplace();
        g->c = need<double>(p, "c");
        g->S = need<double>(p, "T1");
        g->ruin_from = g->S;
        g->window = Window::constant(need<double>(p, "T2") - g->S);
        break;
      }
      case Regime::thm31_lower:
        g.emplace();
        g->model = parse_model(section(p, "model"));
        g->c = need<double>(p, "c");
        g->S = need<double>(p, "S");
        g->window = Window::constant(need<double>(p, "T"));
        break;
      case Regime::cor34_i:
      case Regime::cor34_ii:
      case Regime::cor34_iii:
        g.emplace();
        g->model = GaussianModel::fbm(need<double>(p, "alpha"));
        g->c = need<double>(p, "c");
        g->S = need<double>(p, "S");
        g->window = parse_window(section(p, "window"));
        break;
      case Regime::thm33_i:
      case Regime::thm33_ii:
      case Regime::thm33_iii:
        if (!p.contains("model")) malformed("Monte Carlo for thm33 regimes needs params.model");
        g.emplace();
        g->model = parse_model(section(p, "model"));
        g->c = need<double>(p, "c");
        g->S = need<double>(p, "S");
        g->window = parse_window(section(p, "window"));
        break;
      case Regime::prop11_stable: {
        StableSpec spec{need<double>(p, "alpha"), take<double>(p, "beta", 0.0)};
        const double T = aligned_window(take<double>(p, "T", 0.0), m.grid_step);
        const auto ests = estimate_parisian_stable_ladder(spec, take<double>(p, "c", 1.0), need<double>(p, "S"), us,
                                                          T, m);
        for (std::size_t i = 0; i < us.size(); ++i) mc[i] = ests[i];
        break;
      }
      case Regime::lemma41: malformed("lemma41 has no Monte Carlo counterpart");
      case Regime::thm32_log: break;
    }
    if (g) {
      g->mc = m;
      auto pts = run_gaussian(*g, us);
      for (std::size_t i = 0; i < us.size(); ++i) mc[i] = std::move(pts[i].estimate);
    }
  }

  for (std::size_t i = 0; i < us.size(); ++i) {
    const auto v = evaluate_regime(regime, p, us[i]);
    rec.results.push_back(to_json(*v.asymptotic));
    if (v.exact) rec.results.push_back({{"kind", "exact"}, {"u", us[i]}, {"value", num(*v.exact)}});
    std::optional<double> pm, se;
    if (mc[i]) {
      rec.results.push_back(to_json(*mc[i], us[i]));
      pm = mc[i]->p_hat;
      se = mc[i]->stderr;
    }
    rec.table.rows.push_back(ratio_row(us[i], pm, se, v.asymptotic->value, v.exact));
  }
  rec.config = cfg;
  return rec;
}

inline RunRecord cmd_constants(json cfg) {
  RunRecord rec;
  rec.command = "constants";
  json& s = section(cfg, "spec");
  FunctionalSpec spec;
  const auto mode = parse_constant_mode(take<std::string>(s, "mode", "pickands"));
  if (!mode) malformed("spec.mode must be pickands, piterbarg, inf_const or sup_const");
  spec.mode = *mode;
  spec.alpha = take<double>(s, "alpha", 1.0);
  spec.beta = take<double>(s, "beta", spec.alpha);
  spec.b1 = take<double>(s, "b1", spec.mode == ConstantMode::piterbarg ? 1.0 : 0.0);
  spec.b2 = take<double>(s, "b2", 0.0);
  spec.T = take<double>(s, "T", 0.0);
  spec.grid_step = take<double>(s, "grid_step", 0.01);
  const auto n = take<std::size_t>(cfg, "n", 100000);
  const auto seed = take<std::uint64_t>(cfg, "seed", 1);
  const ParallelOptions par{take<std::size_t>(cfg, "workers", 0), 256};
  rec.table.header = kConstantsHeader;
  const bool ladder = spec.mode == ConstantMode::pickands || spec.mode == ConstantMode::piterbarg;
  if (ladder) {
    if (!cfg.contains("lambdas")) cfg["lambdas"] = std::vector<double>(std::begin(kDefaultLambdas), std::end(kDefaultLambdas));
    const auto lambdas = number_list(cfg, "lambdas");
    spec.lambda = lambdas.front();
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      malformed(e.what());
    }
    const auto est = estimate_constant_ladder(spec, lambdas, n, seed, par);
    rec.results.push_back(to_json(est));
    for (const auto& d : est.diagnostics)
      rec.table.rows.push_back({d.lambda, spec.T, d.raw, d.stderr, d.raw_over_lambda()});
  } else {
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      malformed(e.what());
    }
    const auto est = estimate_constant(spec, n, seed, par);
    rec.results.push_back(to_json(est));
    rec.table.rows.push_back({std::nullopt, spec.T, est.value, est.stderr, std::nullopt});
  }
  rec.config = cfg;
  return rec;
}

// ---------------------------------------------------------------------------
// Driver.

inline json load_config(const std::optional<std::string>& path) {
  if (!path) return json::object();
  std::ifstream is(*path);
  if (!is) malformed("cannot read config file " + *path);
  try {
    json j = json::parse(is);
    if (!j.is_object()) malformed("config document must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    malformed(std::string("config is not valid JSON: ") + e.what());
  }
}

inline void apply_overrides(json& cfg, const std::string& command, const Overrides& o) {
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.workers) cfg["workers"] = *o.workers;
  if (o.out) cfg["out"] = *o.out;
  if (command == "constants") {
    if (o.grid_step) section(cfg, "spec")["grid_step"] = *o.grid_step;
    if (o.n_paths) cfg["n"] = *o.n_paths;
  } else {
    if (o.grid_step) section(cfg, "mc")["grid_step"] = *o.grid_step;
    if (o.n_paths) section(cfg, "mc")["n_paths"] = *o.n_paths;
  }
}

/// Output directory: --out / config "out", else $PARISIAN_OUT_DIR, else ./runs.
inline std::filesystem::path resolve_out_dir(json& cfg) {
  if (cfg.contains("out") && cfg["out"].is_string()) return cfg["out"].get<std::string>();
  const char* env = std::getenv(kOutDirEnv);
  const std::string dir = (env && *env) ? env : kDefaultOutDir;
  cfg["out"] = dir;
  return dir;
}

/// Runs one command with the resolved config; throws CliError on contract failures.
inline RunRecord execute(const std::string& command, json cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> notes;
  RunRecord rec;
  {
    auto& state = detail::log_state();
    LogSink previous;
    {
      std::lock_guard lock(state.mutex);
      previous = state.sink;
      state.sink = [&notes, previous](std::string_view m) {
        notes.emplace_back(m);
        if (previous) previous(m);
      };
    }
    struct Restore {
      detail::LogState& s;
      LogSink prev;
      ~Restore() {
        std::lock_guard lock(s.mutex);
        s.sink = std::move(prev);
      }
    } restore{state, previous};
    try {
      if (command == "simulate") rec = cmd_simulate(std::move(cfg));
      else if (command == "asympt") rec = cmd_asympt(std::move(cfg));
      else if (command == "constants") rec = cmd_constants(std::move(cfg));
      else if (command == "compare") rec = cmd_compare(std::move(cfg));
      else if (command == "stable") rec = cmd_stable(std::move(cfg));
      else throw CliError(exit_malformed_config, "unknown command '" + command + "'");
    } catch (const json::exception& e) {
      malformed(std::string("config error: ") + e.what());
    } catch (const std::invalid_argument& e) {
      malformed(e.what());
    }
  }
  rec.notes = std::move(notes);
  rec.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.timestamp = utc_timestamp();
  return rec;
}

/// Full command: load config, apply overrides, run, persist. Returns the exit code.
inline int run_command(const std::string& command, const std::optional<std::string>& config_path,
                       const Overrides& overrides, std::ostream& out, std::ostream& err) {
  try {
    json cfg = load_config(config_path);
    apply_overrides(cfg, command, overrides);
    const auto dir = resolve_out_dir(cfg);
    auto rec = execute(command, cfg);
    write_record(rec, dir);
    out << rec.table.to_csv();
    out << "wrote " << (dir / "run.json").string() << " and " << (dir / "table.csv").string() << '\n';
    return exit_ok;
  } catch (const CliError& e) {
    err << "error: " << e.what() << '\n';
    return e.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace parisian::cli
