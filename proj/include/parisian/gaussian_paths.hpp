#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include "parisian/diagnostics.hpp"
#include "parisian/grid.hpp"
#include "parisian/models.hpp"
#include "parisian/rng.hpp"

namespace parisian {

/// n sampled trajectories on a common grid, row-major.
struct PathBatch {
  TimeGrid grid;
  std::size_t n_paths = 0;
  std::vector<double> values;
  std::vector<double> weights;  ///< empty means every weight is 1
  std::uint64_t seed = 0;
  std::string model_tag;

  std::span<const double> path(std::size_t i) const {
    return {values.data() + i * grid.size(), grid.size()};
  }
  double value(std::size_t i, std::size_t k) const { return values[i * grid.size() + k]; }
  double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
  bool weighted() const { return !weights.empty(); }
};

// ---------------------------------------------------------------------------
// Per-path samplers. Each `sample` fills one trajectory and returns the log
// likelihood ratio of the target law against the sampling law (0 if untilted).
// Samplers carry scratch buffers; every worker thread uses its own copy.

class BrownianSampler {
 public:
  explicit BrownianSampler(TimeGrid grid) : grid_(std::move(grid)), sd_(std::sqrt(grid_.step())) {}

  double sample(PathRng& rng, std::span<double> out) {
    NormalDist normal;
    double x = grid_.start() > 0 ? std::sqrt(grid_.start()) * normal(rng) : 0.0;
    out[0] = x;
    for (std::size_t k = 1; k < out.size(); ++k) {
      x += sd_ * normal(rng);
      out[k] = x;
    }
    return 0.0;
  }

  const TimeGrid& grid() const { return grid_; }

 private:
  TimeGrid grid_;
  double sd_;
};

/// fBm with alpha = 2: X(t) = t Z.
class LinearSampler {
 public:
  explicit LinearSampler(TimeGrid grid) : grid_(std::move(grid)) {}

  double sample(PathRng& rng, std::span<double> out) {
    NormalDist normal;
    const double z = normal(rng);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = grid_[k] * z;
    return 0.0;
  }

  const TimeGrid& grid() const { return grid_; }

 private:
  TimeGrid grid_;
};

/// Thrown when the circulant embedding has materially negative eigenvalues.
struct CirculantEmbeddingError : std::runtime_error {
  CirculantEmbeddingError(const std::string& what, double min_eig)
      : std::runtime_error(what), min_eigenvalue(min_eig) {}
  double min_eigenvalue;
};

/// Stationary increments synthesised by circulant embedding of their
/// autocovariance, then cumulatively summed from X(0) = 0.
class CirculantSampler {
 public:
  static constexpr double kClipTolerance = 1e-8;

  /// `increment_cov(k)` is Cov(ΔX_0, ΔX_k) for increments over one grid step.
  template <class IncrementCov>
  CirculantSampler(TimeGrid grid, IncrementCov&& increment_cov) : grid_(std::move(grid)) {
    if (grid_.start() != 0.0) throw std::invalid_argument("CirculantSampler: grid must start at 0");
    m_ = grid_.intervals();
    const std::size_t half = std::bit_ceil(std::max<std::size_t>(m_, 1));
    const std::size_t size = 2 * half;
    std::vector<std::complex<double>> row(size), eig(size);
    for (std::size_t k = 0; k <= half; ++k) {
      const double g = increment_cov(k);
      row[k] = g;
      if (k > 0 && k < half) row[size - k] = g;
    }
    Eigen::FFT<double> fft;
    fft.fwd(eig, row);
    auto scale = std::make_shared<std::vector<double>>(size);
    double min_eig = 0.0;
    for (std::size_t k = 0; k < size; ++k) {
      double lam = eig[k].real();
      min_eig = std::min(min_eig, lam);
      if (lam < 0) {
        if (lam < -kClipTolerance) {
          std::ostringstream os;
          os << "circulant embedding has eigenvalue " << lam << " below -" << kClipTolerance;
          throw CirculantEmbeddingError(os.str(), lam);
        }
        lam = 0.0;
      }
      (*scale)[k] = std::sqrt(lam / static_cast<double>(size));
    }
    scale_ = std::move(scale);
    min_eigenvalue_ = min_eig;
    in_.resize(size);
    out_.resize(size);
  }

  double sample(PathRng& rng, std::span<double> out) {
    NormalDist normal;
    const auto& s = *scale_;
    for (std::size_t k = 0; k < in_.size(); ++k) {
      const double re = normal(rng);
      const double im = normal(rng);
      in_[k] = {s[k] * re, s[k] * im};
    }
    fft_.fwd(out_, in_);
    double x = 0.0;
    out[0] = 0.0;
    for (std::size_t k = 0; k < m_; ++k) {
      x += out_[k].real();
      out[k + 1] = x;
    }
    return 0.0;
  }

  const TimeGrid& grid() const { return grid_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  TimeGrid grid_;
  std::size_t m_ = 0;
  std::shared_ptr<const std::vector<double>> scale_;
  double min_eigenvalue_ = 0.0;
  std::vector<std::complex<double>> in_, out_;
  Eigen::FFT<double> fft_;
};

/// Exact finite-dimensional sampler from a factor of the grid covariance.
class CholeskySampler {
 public:
  static constexpr std::size_t kMaxPoints = 4096;
  static constexpr double kRepairTolerance = 1e-10;

  template <class Covariance>
  CholeskySampler(TimeGrid grid, Covariance&& cov) : grid_(std::move(grid)) {
    if (grid_.size() > kMaxPoints) {
      throw std::invalid_argument("CholeskySampler: grid has " + std::to_string(grid_.size()) +
                                  " points, limit is " + std::to_string(kMaxPoints));
    }
    for (std::size_t k = 0; k < grid_.size(); ++k)
      if (cov(grid_[k], grid_[k]) > 0) active_.push_back(k);
    const auto p = static_cast<Eigen::Index>(active_.size());
    Eigen::MatrixXd C(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double v = cov(grid_[active_[i]], grid_[active_[j]]);
        C(i, j) = v;
        C(j, i) = v;
      }
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    Eigen::MatrixXd factor;
    if (llt.info() == Eigen::Success) {
      factor = llt.matrixL();
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
      if (es.info() != Eigen::Success) throw std::runtime_error("CholeskySampler: eigen-decomposition failed");
      Eigen::VectorXd ev = es.eigenvalues();
      const double min_ev = ev.minCoeff();
      if (min_ev < -kRepairTolerance) {
        std::ostringstream os;
        os << "CholeskySampler: covariance is indefinite, most negative eigenvalue " << min_ev;
        throw std::invalid_argument(os.str());
      }
      int clipped = 0;
      for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) < 0) {
          ev(i) = 0;
          ++clipped;
        }
      std::ostringstream os;
      os << "PSD repair: clipped " << clipped << " eigenvalue(s), most negative " << min_ev;
      log_notice(os.str());
      factor = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
    }
    factor_ = std::make_shared<const Eigen::MatrixXd>(std::move(factor));
    z_.resize(p);
  }

  double sample(PathRng& rng, std::span<double> out) {
    NormalDist normal;
    for (Eigen::Index i = 0; i < z_.size(); ++i) z_(i) = normal(rng);
    const Eigen::VectorXd x = (*factor_) * z_;
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < active_.size(); ++i) out[active_[i]] = x(static_cast<Eigen::Index>(i));
    return 0.0;
  }

  const TimeGrid& grid() const { return grid_; }

 private:
  TimeGrid grid_;
  std::vector<std::size_t> active_;
  std::shared_ptr<const Eigen::MatrixXd> factor_;
  Eigen::VectorXd z_;
};

using GaussianSampler = std::variant<BrownianSampler, LinearSampler, CirculantSampler, CholeskySampler>;

inline double sample_path(GaussianSampler& s, PathRng& rng, std::span<double> out) {
  return std::visit([&](auto& impl) { return impl.sample(rng, out); }, s);
}

inline const TimeGrid& sampler_grid(const GaussianSampler& s) {
  return std::visit([](const auto& impl) -> const TimeGrid& { return impl.grid(); }, s);
}

inline CholeskySampler make_cholesky_sampler(const GaussianModel& model, const TimeGrid& grid) {
  return CholeskySampler(grid, [&](double s, double t) { return model.covariance(s, t); });
}

/// Increment autocovariance for a stationary-increment model at lag k steps of size h.
inline double increment_autocovariance(const GaussianModel& model, std::size_t k, double h) {
  const double kk = static_cast<double>(k);
  return 0.5 * (model.increment_variance((kk + 1) * h) + model.increment_variance((kk - 1) * h) -
                2 * model.increment_variance(kk * h));
}

/// Circulant sampler for a stationary-increment model, falling back to the
/// exact Cholesky sampler (with a notice) when the embedding is not PSD.
inline GaussianSampler make_stationary_sampler(const GaussianModel& model, const TimeGrid& grid) {
  try {
    const double h = grid.step();
    return CirculantSampler(grid, [&](std::size_t k) { return increment_autocovariance(model, k, h); });
  } catch (const CirculantEmbeddingError& e) {
    log_notice(std::string("falling back to Cholesky sampling: ") + e.what());
    return make_cholesky_sampler(model, grid);
  }
}

/// Default sampler for a model on a grid.
inline GaussianSampler make_path_sampler(const GaussianModel& model, const TimeGrid& grid) {
  switch (model.kind()) {
    case ModelKind::brownian_motion: return BrownianSampler(grid);
    case ModelKind::fractional_bm:
      if (model.alpha() == 1.0) return BrownianSampler(grid);
      if (model.alpha() == 2.0) return LinearSampler(grid);
      [[fallthrough]];
    case ModelKind::stationary_increments:
      if (grid.start() != 0.0) return make_cholesky_sampler(model, grid);
      return make_stationary_sampler(model, grid);
  }
  throw std::logic_error("make_path_sampler: unknown model kind");
}

/// Gaussian sampler with mean shifted by a * r(t, anchor). The returned log
/// weight is the exact finite-dimensional likelihood ratio
/// -a X(anchor) + a^2 sigma^2(anchor) / 2.
class TiltedSampler {
 public:
  TiltedSampler(GaussianSampler base, const GaussianModel& model, std::size_t anchor, double a)
      : base_(std::move(base)), anchor_(anchor), a_(a) {
    const TimeGrid& g = sampler_grid(base_);
    if (anchor >= g.size()) throw std::invalid_argument("TiltedSampler: anchor outside grid");
    const double ta = g[anchor];
    var_anchor_ = model.variance(ta);
    shift_.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) shift_[k] = a * model.covariance(g[k], ta);
  }

  double sample(PathRng& rng, std::span<double> out) {
    sample_path(base_, rng, out);
    if (a_ == 0.0) return 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += shift_[k];
    return -a_ * out[anchor_] + 0.5 * a_ * a_ * var_anchor_;
  }

  const TimeGrid& grid() const { return sampler_grid(base_); }
  double tilt() const { return a_; }

 private:
  GaussianSampler base_;
  std::size_t anchor_;
  double a_;
  double var_anchor_ = 0.0;
  std::vector<double> shift_;
};

// ---------------------------------------------------------------------------
// Batch front ends.

template <class Sampler>
PathBatch sample_batch(const Sampler& proto, std::size_t n, std::uint64_t seed, std::string tag,
                       bool weighted, const ParallelOptions& par = {}) {
  if (n == 0) throw std::invalid_argument("sample_batch: need at least one path");
  PathBatch batch;
  batch.grid = proto.grid();
  batch.n_paths = n;
  batch.seed = seed;
  batch.model_tag = std::move(tag);
  const std::size_t m = batch.grid.size();
  batch.values.assign(n * m, 0.0);
  if (weighted) batch.weights.assign(n, 1.0);
  for_each_index(n, par, [&] {
    return [&, s = proto](std::size_t i) mutable {
      auto rng = path_rng(seed, i);
      const double lw = s.sample(rng, std::span<double>(batch.values.data() + i * m, m));
      if (weighted) batch.weights[i] = std::exp(lw);
    };
  });
  return batch;
}

/// Adapter so a GaussianSampler variant fits `sample_batch`.
struct VariantSampler {
  GaussianSampler impl;
  double sample(PathRng& rng, std::span<double> out) { return sample_path(impl, rng, out); }
  const TimeGrid& grid() const { return sampler_grid(impl); }
};

inline PathBatch sample_bm(const TimeGrid& grid, std::size_t n, std::uint64_t seed, const ParallelOptions& par = {}) {
  return sample_batch(BrownianSampler(grid), n, seed, "bm", false, par);
}

inline PathBatch sample_fbm(const TimeGrid& grid, double alpha, std::size_t n, std::uint64_t seed,
                            const ParallelOptions& par = {}) {
  if (grid.start() != 0.0) throw std::invalid_argument("sample_fbm: grid must start at 0");
  const auto model = GaussianModel::fbm(alpha);
  return sample_batch(VariantSampler{make_path_sampler(model, grid)}, n, seed, model.tag(), false, par);
}

inline PathBatch sample_cholesky(const GaussianModel& model, const TimeGrid& grid, std::size_t n,
                                 std::uint64_t seed, const ParallelOptions& par = {}) {
  return sample_batch(make_cholesky_sampler(model, grid), n, seed, model.tag(), false, par);
}

/// Samples with the model's default sampler.
inline PathBatch sample_paths(const GaussianModel& model, const TimeGrid& grid, std::size_t n, std::uint64_t seed,
                              const ParallelOptions& par = {}) {
  return sample_batch(VariantSampler{make_path_sampler(model, grid)}, n, seed, model.tag(), false, par);
}

inline PathBatch sample_shifted(const GaussianModel& model, const TimeGrid& grid, double anchor, double a,
                                std::size_t n, std::uint64_t seed, const ParallelOptions& par = {}) {
  const auto idx = grid.index_of(anchor);
  if (!idx) throw std::invalid_argument("sample_shifted: anchor " + std::to_string(anchor) + " is not a grid point");
  if (!std::isfinite(a)) throw std::invalid_argument("sample_shifted: tilt must be finite");
  TiltedSampler s(make_path_sampler(model, grid), model, *idx, a);
  return sample_batch(s, n, seed, model.tag() + "+tilt", true, par);
}

}  // namespace parisian
