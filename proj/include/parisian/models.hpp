#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace parisian {

/// Local structure of a Gaussian risk driver at the variance maximiser S.
///
/// sigma(t) = sigma_S - A (S-t)^beta1 (1+o(1)) to the left of S,
/// sigma(t) = sigma_S - A_pm (t-S)^beta2 (1+o(1)) to the right, and the
/// standardised correlation is 1 - D|t-s|^alpha near S. Q and gamma (the
/// Hölder bound on increments) are carried for reference only.
struct LocalExpansion {
  double sigma_S = 1.0;
  double A = 1.0;
  double A_pm = 0.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double D = 0.5;
  double alpha = 1.0;
  std::optional<double> Q;
  std::optional<double> gamma;

  void validate() const {
    if (!(sigma_S > 0)) throw std::invalid_argument("LocalExpansion: sigma_S must be > 0");
    if (!(A > 0)) throw std::invalid_argument("LocalExpansion: A must be > 0");
    if (!(D > 0)) throw std::invalid_argument("LocalExpansion: D must be > 0");
    if (!(alpha > 0 && alpha <= 2)) throw std::invalid_argument("LocalExpansion: alpha must lie in (0,2]");
    if (!(beta1 > 0 && beta1 <= 1)) throw std::invalid_argument("LocalExpansion: beta1 must lie in (0,1]");
    if (!(beta2 >= beta1 && beta2 <= 1))
      throw std::invalid_argument("LocalExpansion: need beta1 <= beta2 <= 1");
    if (!std::isfinite(A_pm)) throw std::invalid_argument("LocalExpansion: A_pm must be finite");
    if (Q && !(*Q > 0)) throw std::invalid_argument("LocalExpansion: Q must be > 0");
    if (gamma && !(*gamma > 0)) throw std::invalid_argument("LocalExpansion: gamma must be > 0");
  }

  /// Parameters of standard fBm with Hurst index alpha/2 at horizon S.
  static LocalExpansion for_fbm(double alpha, double S) {
    LocalExpansion le;
    le.sigma_S = std::pow(S, alpha / 2);
    le.A = alpha / 2 * std::pow(S, alpha / 2 - 1);
    le.A_pm = -le.A;
    le.beta1 = 1.0;
    le.beta2 = 1.0;
    le.D = 1.0 / (2 * std::pow(S, alpha));
    le.alpha = alpha;
    le.Q = 1.0;
    le.gamma = alpha;
    return le;
  }
};

enum class ModelKind { brownian_motion, fractional_bm, stationary_increments };

/// Centered Gaussian driver with X(0)=0.
class GaussianModel {
 public:
  using Fn = std::function<double(double)>;

  static GaussianModel brownian() {
    GaussianModel m;
    m.kind_ = ModelKind::brownian_motion;
    m.alpha_ = 1.0;
    m.tag_ = "bm";
    return m;
  }

  static GaussianModel fbm(double alpha) {
    if (!(alpha > 0 && alpha <= 2)) throw std::invalid_argument("fbm: alpha must lie in (0,2]");
    GaussianModel m;
    m.kind_ = ModelKind::fractional_bm;
    m.alpha_ = alpha;
    m.tag_ = "fbm(alpha=" + std::to_string(alpha) + ")";
    return m;
  }

  /// Stationary increments with Var(X(t)-X(s)) = V(|t-s|). V must satisfy V(0)=0,
  /// V(t)>0 for t>0; Thm-style bounds additionally assume V convex increasing and
  /// use `dV` when supplied.
  static GaussianModel stationary_increments(Fn V, Fn dV = {}, std::string tag = "si") {
    if (!V) throw std::invalid_argument("stationary_increments: variance function required");
    if (std::abs(V(0.0)) > 1e-14) throw std::invalid_argument("stationary_increments: V(0) must be 0");
    for (double t : {1e-6, 1e-3, 0.1, 1.0, 10.0})
      if (!(V(t) > 0)) throw std::invalid_argument("stationary_increments: V(t) must be > 0 for t > 0");
    GaussianModel m;
    m.kind_ = ModelKind::stationary_increments;
    m.V_ = std::move(V);
    m.dV_ = std::move(dV);
    m.tag_ = std::move(tag);
    return m;
  }

  ModelKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const std::string& tag() const { return tag_; }

  /// Var(X(t+h) - X(t)) = V(|h|).
  double increment_variance(double h) const {
    h = std::abs(h);
    switch (kind_) {
      case ModelKind::brownian_motion: return h;
      case ModelKind::fractional_bm: return h == 0 ? 0.0 : std::pow(h, alpha_);
      case ModelKind::stationary_increments: return V_(h);
    }
    return 0.0;
  }

  double variance(double t) const { return increment_variance(t); }

  double covariance(double s, double t) const {
    if (kind_ == ModelKind::brownian_motion && s >= 0 && t >= 0) return std::min(s, t);
    return 0.5 * (increment_variance(s) + increment_variance(t) - increment_variance(t - s));
  }

  /// V'(t) where known in closed form or supplied.
  std::optional<double> variance_derivative(double t) const {
    switch (kind_) {
      case ModelKind::brownian_motion: return 1.0;
      case ModelKind::fractional_bm: return alpha_ * std::pow(t, alpha_ - 1);
      case ModelKind::stationary_increments:
        if (dV_) return dV_(t);
        return std::nullopt;
    }
    return std::nullopt;
  }

  /// Exponent r of the discretisation error δ^r of sup/inf functionals.
  double roughness_rate() const {
    if (kind_ == ModelKind::fractional_bm) return alpha_ / 2;
    return 0.5;
  }

  std::optional<LocalExpansion> local;

 private:
  GaussianModel() = default;

  ModelKind kind_ = ModelKind::brownian_motion;
  double alpha_ = 1.0;
  Fn V_;
  Fn dV_;
  std::string tag_;
};

}  // namespace parisian
