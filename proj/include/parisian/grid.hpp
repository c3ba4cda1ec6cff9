#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace parisian {

/// Uniform time grid with both endpoints included.
class TimeGrid {
 public:
  TimeGrid() = default;

  double start() const { return start_; }
  double end() const { return end_; }
  double step() const { return step_; }
  std::size_t size() const { return points_.size(); }
  std::size_t intervals() const { return points_.size() - 1; }
  double operator[](std::size_t i) const { return points_[i]; }
  std::span<const double> points() const { return points_; }

  /// Index of the grid point equal to `t` up to `tol` (relative to step), if any.
  std::optional<std::size_t> index_of(double t, double tol = 1e-9) const {
    const double k = (t - start_) / step_;
    const double r = std::round(k);
    if (std::abs(k - r) > tol || r < 0 || r > static_cast<double>(intervals())) return std::nullopt;
    return static_cast<std::size_t>(r);
  }

  /// Number of whole steps in `length`, or nullopt when not an integral multiple.
  std::optional<std::size_t> steps_in(double length, double tol = 1e-9) const {
    if (length < 0) return std::nullopt;
    const double k = length / step_;
    const double r = std::round(k);
    if (std::abs(k - r) > tol) return std::nullopt;
    return static_cast<std::size_t>(r);
  }

  friend TimeGrid make_grid(double start, double end, double step);

 private:
  double start_ = 0.0;
  double end_ = 0.0;
  double step_ = 1.0;
  std::vector<double> points_{0.0};
};

inline TimeGrid make_grid(double start, double end, double step) {
  if (!(step > 0) || !std::isfinite(step))
    throw std::invalid_argument("make_grid: step must be positive and finite");
  if (!(start >= 0) || !(end > start))
    throw std::invalid_argument("make_grid: need 0 <= start < end");
  const double k = (end - start) / step;
  const double n = std::round(k);
  if (std::abs(k - n) > 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << "make_grid: span " << (end - start) << " is not an integral multiple of step " << step
       << " (ratio " << k << ")";
    throw std::invalid_argument(os.str());
  }
  TimeGrid g;
  g.start_ = start;
  g.end_ = end;
  g.step_ = step;
  const auto m = static_cast<std::size_t>(n);
  g.points_.resize(m + 1);
  for (std::size_t i = 0; i <= m; ++i) g.points_[i] = start + static_cast<double>(i) * step;
  g.points_[m] = end;
  return g;
}

}  // namespace parisian
