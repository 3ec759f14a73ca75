#pragma once

#include <span>
#include <utility>
#include <vector>

namespace cebound {

/// Concave, non-decreasing, piecewise-linear function on [0, inf).
///
/// Defined by breakpoints (x_0 = 0, y_0), ..., (x_m, y_m) joined linearly and
/// extended past x_m with `tail_slope`.
class Modulus {
 public:
  using Point = std::pair<double, double>;

  Modulus() = default;
  /// Throws InvariantViolation unless the function is concave and
  /// non-decreasing with y_0 >= 0.
  Modulus(std::vector<Point> breakpoints, double tail_slope);

  /// F(x) = offset + slope * x.
  static Modulus linear(double slope, double offset = 0.0);
  static Modulus zero() { return linear(0.0, 0.0); }

  /// Throws StructuralError for negative or non-finite arguments.
  double operator()(double x) const;

  const std::vector<Point>& breakpoints() const noexcept { return points_; }
  double tail_slope() const noexcept { return tail_slope_; }
  double offset() const noexcept { return points_.front().second; }
  bool is_linear() const noexcept { return points_.size() == 1; }
  /// Slope of the linear form; only meaningful when is_linear().
  double slope() const noexcept { return tail_slope_; }

 private:
  std::vector<Point> points_{{0.0, 0.0}};
  double tail_slope_ = 0.0;
};

/// Least concave non-decreasing majorant of the scatter (and of 0): upper
/// concave hull followed by flattening after the maximum. A scatter whose
/// distances are all zero yields the constant max gap.
Modulus concave_envelope(std::span<const Modulus::Point> scatter);

/// Smallest F(x) = F(0) + L x dominating the scatter, with F(0) the largest
/// gap observed at distance zero.
Modulus linear_fit(std::span<const Modulus::Point> scatter);

/// Largest amount by which any scatter point exceeds F.
double max_excess(const Modulus& f, std::span<const Modulus::Point> scatter);

}  // namespace cebound
