#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "parisian/diagnostics.hpp"
#include "parisian/gaussian_tail.hpp"
#include "parisian/models.hpp"
#include "parisian/parisian_estimator.hpp"

namespace parisian {

enum class Regime {
  thm21,
  thm31_lower,
  thm32_log,
  thm33_i,
  thm33_ii,
  thm33_iii,
  cor34_i,
  cor34_ii,
  cor34_iii,
  prop11_stable,
  lemma41,
};

inline constexpr std::string_view regime_names[] = {
    "thm21",   "thm31_lower", "thm32_log", "thm33_i",       "thm33_ii", "thm33_iii",
    "cor34_i", "cor34_ii",    "cor34_iii", "prop11_stable", "lemma41",
};

inline std::string_view to_string(Regime r) { return regime_names[static_cast<int>(r)]; }

inline std::optional<Regime> parse_regime(std::string_view s) {
  for (int i = 0; i < static_cast<int>(std::size(regime_names)); ++i)
    if (regime_names[i] == s) return static_cast<Regime>(i);
  return std::nullopt;
}

struct AsymptoticValue {
  double value = 0.0;
  Regime regime = Regime::thm21;
  std::map<std::string, double> inputs;
  std::vector<std::string> validity_notes;
};

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

inline void check_finite(const AsymptoticValue& v) {
  if (!std::isfinite(v.value)) throw std::runtime_error("asymptotic value is not finite");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Brownian building blocks.

/// K_{c,y} = 2 phi(c sqrt y)/sqrt y - 2 c Psi(c sqrt y).
inline double k_constant(double c, double y) {
  detail::require(c > 0 && std::isfinite(c), "k_constant: c must be > 0");
  detail::require(y > 0 && std::isfinite(y), "k_constant: y must be > 0");
  const double sy = std::sqrt(y);
  return 2 * gauss_partial_expectation(c * sy) / sy;
}

/// exp(a) * Psi(x) evaluated in log space.
inline double exp_times_tail(double a, double x) { return std::exp(a + gauss_log_sf(x)); }

struct SupDriftLaw {
  double tail;     ///< P(sup_{[0,delta]} (B(t) + c t) > u)
  double density;  ///< its density at u
};

inline SupDriftLaw bm_sup_drift_law(double c, double delta, double u) {
  detail::require(u > 0, "bm_sup_drift_law: u must be > 0");
  detail::require(delta > 0, "bm_sup_drift_law: delta must be > 0");
  detail::require(std::isfinite(c), "bm_sup_drift_law: c must be finite");
  const double sd = std::sqrt(delta);
  const double a = (u - c * delta) / sd;
  const double b = (u + c * delta) / sd;
  const double tail = gauss_sf(a) + exp_times_tail(2 * c * u, b);
  const double density = 2 * gauss_pdf(a) / sd - 2 * c * exp_times_tail(2 * c * u, b);
  return {std::min(tail, 1.0), density};
}

/// P(sup_{[0,delta]} (B(t) + c t) <= m); zero for m < 0 when c >= 0.
inline double bm_sup_drift_cdf(double c, double delta, double m) {
  if (m <= 0) return 0.0;
  const double sd = std::sqrt(delta);
  const double v = gauss_cdf((m - c * delta) / sd) - exp_times_tail(2 * c * m, (m + c * delta) / sd);
  return std::max(v, 0.0);
}

/// Classical finite-horizon ruin P(sup_{[0,S]} (B(t) - c t) > u).
inline double bm_classical_ruin(double c, double S, double u) { return bm_sup_drift_law(-c, S, u).tail; }

/// P(inf_{[T1,T2]} (B(t) - c t) > u) by Gauss-Kronrod quadrature.
inline double bm_inf_tail_exact(double c, double T1, double T2, double u, double* error_estimate = nullptr) {
  detail::require(c > 0, "bm_inf_tail_exact: c must be > 0");
  detail::require(T1 > 0 && T2 >= T1, "bm_inf_tail_exact: need 0 < T1 <= T2");
  detail::require(u > 0, "bm_inf_tail_exact: u must be > 0");
  const double s1 = std::sqrt(T1);
  const double y0 = (u + c * T1) / s1;
  if (T2 == T1) {
    if (error_estimate) *error_estimate = 0.0;
    return gauss_sf(y0);
  }
  const double delta = T2 - T1;
  // P = phi(y0) * int_0^inf exp(-y0 z - z^2/2) F_M(sqrt(T1) z) dz, M the drifted sup over [0,delta].
  auto f = [&](double z) { return std::exp(-y0 * z - 0.5 * z * z) * bm_sup_drift_cdf(c, delta, s1 * z); };
  constexpr double kUpper = 40.0;
  double err = 0.0;
  const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, kUpper, 20, 1e-14, &err);
  const double scale = gauss_pdf(y0);
  const double result = scale * I;
  const double abs_err = scale * err;
  if (error_estimate) *error_estimate = abs_err;
  if (abs_err > 1e-12 && err > 1e-10 * I) {
    std::ostringstream os;
    os.precision(17);
    os << "bm_inf_tail_exact: quadrature did not converge (estimate " << result << ", error " << abs_err << ")";
    throw std::runtime_error(os.str());
  }
  return result;
}

inline AsymptoticValue bm_inf_tail_asymptotic(double c, double T1, double T2, double u) {
  detail::require(c > 0, "bm_inf_tail_asymptotic: c must be > 0");
  detail::require(T1 > 0, "bm_inf_tail_asymptotic: T1 must be > 0");
  detail::require(u > 0, "bm_inf_tail_asymptotic: u must be > 0");
  if (!(T2 > T1))
    throw std::invalid_argument("bm_inf_tail_asymptotic: need T2 > T1 (use bm_inf_tail_exact for T1 = T2)");
  AsymptoticValue v;
  v.regime = Regime::thm21;
  v.value = k_constant(c, T2 - T1) * (T1 / u) * gauss_sf((u + c * T1) / std::sqrt(T1));
  v.inputs = {{"c", c}, {"T1", T1}, {"T2", T2}, {"u", u}};
  detail::check_finite(v);
  return v;
}

// ---------------------------------------------------------------------------
// General Gaussian drivers.

/// Lower bound C_{c,Delta} sigma^2(S)/u Psi((u+cS)/sigma(S)), Delta = V(S+T) - V(S).
inline AsymptoticValue lower_bound_thm31(const GaussianModel& model, double c, double S, double T, double u) {
  detail::require(c > 0 && S > 0 && T > 0 && u > 0, "lower_bound_thm31: need c, S, T, u > 0");
  const auto dV = model.variance_derivative(S);
  if (!dV) throw std::invalid_argument("lower_bound_thm31: model has no variance derivative");
  if (!(*dV > 0)) throw std::invalid_argument("lower_bound_thm31: V'(S) must be > 0");
  const double VS = model.variance(S);
  const double delta = model.variance(S + T) - VS;
  detail::require(delta > 0, "lower_bound_thm31: V must increase on [S, S+T]");
  AsymptoticValue v;
  v.regime = Regime::thm31_lower;
  const double C = k_constant(c / *dV, delta);
  v.value = C * VS / u * gauss_sf((u + c * S) / std::sqrt(VS));
  v.inputs = {{"c", c}, {"S", S}, {"T", T}, {"u", u}, {"delta", delta}, {"dV_S", *dV}, {"C", C}};
  detail::check_finite(v);
  return v;
}

inline constexpr std::string_view kLogRateNote =
    "rate -1/(2 sigma^2(S)) follows from the lower bound and the upper bound 2 Psi(u/sigma(S)); "
    "the displayed limit -1/sigma^2(S) is recorded as displayed_rate";

/// lim log P / u^2 = -1/(2 sigma^2(S)).
inline double log_rate(const GaussianModel& model, double S) {
  detail::require(S > 0, "log_rate: S must be > 0");
  const double v = model.variance(S);
  if (!(v > 0)) throw std::invalid_argument("log_rate: sigma(S) must be > 0");
  return -1.0 / (2 * v);
}

inline double displayed_log_rate(const GaussianModel& model, double S) { return 2 * log_rate(model, S); }

namespace detail {

enum class Limit { zero, finite, infinite };

/// Behaviour of T_u u^p as u -> infinity.
inline Limit window_limit(const Window& w, double p, double* value) {
  if (w.T == 0) {
    *value = 0.0;
    return Limit::zero;
  }
  if (w.rule == Window::Rule::constant) {
    *value = INFINITY;
    return Limit::infinite;
  }
  if (std::abs(w.kappa - p) <= 1e-12 * std::max(1.0, p)) {
    *value = w.T;
    return Limit::finite;
  }
  *value = w.kappa > p ? 0.0 : INFINITY;
  return w.kappa > p ? Limit::zero : Limit::infinite;
}

inline std::string format_exponent(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

}  // namespace detail

/// Exact asymptotics for drivers with local expansion `local` at S. The
/// window rule fixes T = lim T_u u^{2/alpha}; `constant` is F_alpha or the
/// generalised Piterbarg constant evaluated at D^{1/alpha} sigma_S^{-2/alpha} T.
inline AsymptoticValue gauss_exact_asymptotic(const LocalExpansion& local, double c, double S, double u,
                                              const Window& window, std::optional<double> constant = std::nullopt) {
  local.validate();
  window.validate();
  detail::require(c > 0 && S > 0 && u > 0, "gauss_exact_asymptotic: need c, S, u > 0");
  const double alpha = local.alpha, b1 = local.beta1, sig = local.sigma_S;
  AsymptoticValue v;
  v.inputs = {{"c", c},         {"S", S},         {"u", u},           {"sigma_S", sig}, {"A", local.A},
              {"A_pm", local.A_pm}, {"beta1", b1}, {"beta2", local.beta2}, {"D", local.D}, {"alpha", alpha},
              {"window_T", window.T}};
  if (window.rule == Window::Rule::scaled) v.inputs["window_kappa"] = window.kappa;
  const double psi = gauss_sf((u + c * S) / sig);

  const double p_alpha = 2 / alpha;
  double T = 0.0;
  const auto lim = detail::window_limit(window, p_alpha, &T);
  const double arg = std::pow(local.D, 1 / alpha) * std::pow(sig, -2 / alpha) * (std::isfinite(T) ? T : 0.0);

  const bool equal = std::abs(alpha - b1) <= 1e-12;
  if (equal || alpha < b1) {
    if (lim == detail::Limit::infinite)
      v.validity_notes.push_back("requires lim T_u u^{" + detail::format_exponent(p_alpha) +
                                 "} finite; the supplied window rule violates it");
    if (!constant) throw std::invalid_argument("gauss_exact_asymptotic: this regime needs a supplied constant");
    detail::require(*constant > 0, "gauss_exact_asymptotic: constant must be > 0");
    v.inputs["T_limit"] = T;
    v.inputs["constant"] = *constant;
    v.inputs["constant_argument"] = arg;
    if (equal) {
      v.regime = Regime::thm33_ii;
      v.inputs["b1"] = local.A / (local.D * sig);
      v.inputs["b2"] = local.A_pm / (local.D * sig);
      v.value = *constant * psi;
    } else {
      v.regime = Regime::thm33_i;
      v.value = *constant * std::tgamma(1 / b1 + 1) * std::pow(local.D, 1 / alpha) * std::pow(local.A, -1 / b1) *
                std::pow(sig, 3 / b1 - 2 / alpha) * std::pow(u, 2 / alpha - 2 / b1) * psi;
    }
  } else {
    v.regime = Regime::thm33_iii;
    v.value = psi;
    double T2 = 0.0;
    const double p_beta2 = 2 / local.beta2;
    const auto lim2 = detail::window_limit(window, p_beta2, &T2);
    if (lim != detail::Limit::zero)
      v.validity_notes.push_back("requires lim T_u u^{" + detail::format_exponent(p_alpha) + "} = 0");
    if (lim2 != detail::Limit::zero)
      v.validity_notes.push_back("requires lim T_u u^{" + detail::format_exponent(p_beta2) + "} = 0");
  }
  detail::check_finite(v);
  return v;
}

/// fBm specialisation with alpha in (0,1), = 1, or in (1,2].
inline AsymptoticValue fbm_corollary_asymptotic(double alpha, double c, double S, double u, const Window& window,
                                                std::optional<double> constant = std::nullopt) {
  detail::require(alpha > 0 && alpha <= 2, "fbm_corollary_asymptotic: alpha must lie in (0,2]");
  detail::require(c > 0 && S > 0 && u > 0, "fbm_corollary_asymptotic: need c, S, u > 0");
  window.validate();
  AsymptoticValue v;
  v.inputs = {{"alpha", alpha}, {"c", c}, {"S", S}, {"u", u}, {"window_T", window.T}};
  if (window.rule == Window::Rule::scaled) v.inputs["window_kappa"] = window.kappa;
  const double psi = gauss_sf((u + c * S) / std::pow(S, alpha / 2));
  double T = 0.0;
  if (alpha <= 1) {
    const double p = 2 / alpha;
    const auto lim = detail::window_limit(window, p, &T);
    if (lim == detail::Limit::infinite)
      v.validity_notes.push_back("requires lim T_u u^{" + detail::format_exponent(p) +
                                 "} finite; the supplied window rule violates it");
    if (!constant) throw std::invalid_argument("fbm_corollary_asymptotic: this regime needs a supplied constant");
    detail::require(*constant > 0, "fbm_corollary_asymptotic: constant must be > 0");
    const double Tf = std::isfinite(T) ? T : 0.0;
    v.inputs["T_limit"] = T;
    v.inputs["constant"] = *constant;
    if (alpha == 1) {
      v.regime = Regime::cor34_ii;
      v.inputs["constant_argument"] = Tf / (2 * S * S);
      v.value = *constant * psi;
    } else {
      v.regime = Regime::cor34_i;
      v.inputs["constant_argument"] = std::pow(2.0, -1 / alpha) * Tf / (S * S);
      v.value = *constant / alpha * std::pow(2.0, 1 - 1 / alpha) * std::pow(S, alpha - 1) *
                std::pow(u, 2 / alpha - 2) * psi;
    }
  } else {
    v.regime = Regime::cor34_iii;
    v.value = psi;
    if (detail::window_limit(window, 2.0, &T) != detail::Limit::zero)
      v.validity_notes.push_back("requires lim T_u u^{2} = 0");
  }
  detail::check_finite(v);
  return v;
}

// ---------------------------------------------------------------------------
// Heavy tails and difference tails.

/// Tail constant (1-alpha)/(Gamma(2-alpha) cos(pi alpha/2)) of S_alpha(1, 1, 0).
inline double stable_tail_constant(double alpha) {
  detail::require(alpha > 1 && alpha < 2, "stable_tail_constant: alpha must lie in (1,2)");
  return (1 - alpha) / (std::tgamma(2 - alpha) * std::cos(std::numbers::pi * alpha / 2));
}

inline AsymptoticValue levy_stable_asymptotic(double alpha, double beta, double S, double u) {
  detail::require(alpha > 1 && alpha < 2, "levy_stable_asymptotic: alpha must lie in (1,2)");
  detail::require(beta >= -1 && beta <= 1, "levy_stable_asymptotic: beta must lie in [-1,1]");
  detail::require(S > 0 && u > 0, "levy_stable_asymptotic: need S, u > 0");
  AsymptoticValue v;
  v.regime = Regime::prop11_stable;
  v.inputs = {{"alpha", alpha}, {"beta", beta}, {"S", S}, {"u", u}};
  v.value = stable_tail_constant(alpha) * (1 + beta) / 2 * S * std::pow(u, -alpha);
  if (beta == -1) {
    v.value = 0.0;
    v.validity_notes.push_back("totally skewed to the left (beta = -1): the right tail is lighter than any power");
  }
  detail::check_finite(v);
  return v;
}

struct DiffTailSpec {
  std::function<double(double)> w;           ///< scaling function, increasing to infinity
  double alphaY = 0.0;                       ///< index of P(Y < x/u)
  std::function<double(double)> yLowTail;    ///< u -> P(Y < 1/w(u))
  std::function<double(double)> xTail;       ///< u -> P(X > u)

  void validate() const {
    if (!w || !yLowTail || !xTail) throw std::invalid_argument("DiffTailSpec: w, yLowTail and xTail are required");
    if (!(alphaY >= 0)) throw std::invalid_argument("DiffTailSpec: alphaY must be >= 0");
    if (!(w(10) < w(100) && w(100) < w(1000))) throw std::invalid_argument("DiffTailSpec: w must increase");
  }
};

/// P(X - Y > u) ~ Gamma(alphaY + 1) P(Y < 1/w(u)) P(X > u).
inline AsymptoticValue diff_tail_asymptotic(const DiffTailSpec& spec, double u) {
  spec.validate();
  detail::require(u > 0, "diff_tail_asymptotic: u must be > 0");
  AsymptoticValue v;
  v.regime = Regime::lemma41;
  v.inputs = {{"u", u}, {"alphaY", spec.alphaY}, {"w", spec.w(u)}};
  v.value = std::tgamma(spec.alphaY + 1) * spec.yLowTail(u) * spec.xTail(u);
  detail::check_finite(v);
  return v;
}

/// Half-normal example: X ~ N(0,1), Y = |Z| independent, w(u) = u, alphaY = 1.
inline DiffTailSpec half_normal_difference_spec() {
  DiffTailSpec s;
  s.w = [](double u) { return u; };
  s.alphaY = 1.0;
  s.yLowTail = [](double u) { return 1 - 2 * gauss_sf(1 / u); };
  s.xTail = [](double u) { return gauss_sf(u); };
  return s;
}

/// P(X - |Z| > u) = int_0^inf Psi(u + y) 2 phi(y) dy.
inline double half_normal_difference_tail(double u) {
  detail::require(u > 0, "half_normal_difference_tail: u must be > 0");
  // Factor out Psi(u) so the integrand stays O(1).
  const double lu = gauss_log_sf(u);
  auto f = [&](double y) { return 2 * gauss_pdf(y) * std::exp(gauss_log_sf(u + y) - lu); };
  double err = 0.0;
  const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 40.0, 20, 1e-14, &err);
  return std::exp(lu) * I;
}

/// Limit law of u^2 (S - tau_u) given tau_u < S for fBm.
inline double ruin_time_limit_cdf(double alpha, double S, double x) {
  detail::require(alpha > 0 && alpha <= 2 && S > 0, "ruin_time_limit_cdf: need alpha in (0,2], S > 0");
  if (x <= 0) return 0.0;
  return -std::expm1(-alpha / 2 * std::pow(S, -alpha - 1) * x);
}

}  // namespace parisian
