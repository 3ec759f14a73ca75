#include "cebound/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cebound/errors.hpp"

namespace cebound {

namespace {
constexpr double kShapeTol = 1e-12;
}

Modulus::Modulus(std::vector<Point> breakpoints, double tail_slope)
    : points_(std::move(breakpoints)), tail_slope_(tail_slope) {
  if (points_.empty() || points_.front().first != 0.0) {
    throw InvariantViolation("modulus must start at x = 0");
  }
  if (!(points_.front().second >= 0.0)) throw InvariantViolation("modulus must satisfy F(0) >= 0");
  if (!(tail_slope_ >= 0.0) || !std::isfinite(tail_slope_)) {
    throw InvariantViolation("modulus tail slope must be finite and non-negative");
  }
  double prev_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const auto [x0, y0] = points_[i - 1];
    const auto [x1, y1] = points_[i];
    if (!(x1 > x0)) throw InvariantViolation("modulus breakpoints must increase in x");
    if (y1 < y0 - kShapeTol) throw InvariantViolation("modulus must be non-decreasing");
    const double slope = (y1 - y0) / (x1 - x0);
    if (slope > prev_slope + kShapeTol * std::max(1.0, std::abs(prev_slope))) {
      throw InvariantViolation("modulus must be concave");
    }
    prev_slope = slope;
  }
  if (tail_slope_ > prev_slope + kShapeTol * std::max(1.0, std::abs(prev_slope))) {
    throw InvariantViolation("modulus tail slope breaks concavity");
  }
}

Modulus Modulus::linear(double slope, double offset) { return Modulus({{0.0, offset}}, slope); }

double Modulus::operator()(double x) const {
  if (!(x >= 0.0) || !std::isfinite(x)) throw StructuralError("modulus evaluated at a negative or non-finite distance");
  const auto& last = points_.back();
  if (x >= last.first) return last.second + tail_slope_ * (x - last.first);
  auto it = std::upper_bound(points_.begin(), points_.end(), x,
                             [](double v, const Point& p) { return v < p.first; });
  const Point& hi = *it;
  const Point& lo = *(it - 1);
  const double w = (x - lo.first) / (hi.first - lo.first);
  return lo.second + w * (hi.second - lo.second);
}

Modulus concave_envelope(std::span<const Modulus::Point> scatter) {
  std::vector<Modulus::Point> pts{{0.0, 0.0}};
  for (const auto& [x, y] : scatter) {
    if (!(x >= 0.0)) throw StructuralError("negative distance in modulus scatter");
    pts.emplace_back(x, std::max(0.0, y));
  }
  std::sort(pts.begin(), pts.end());
  // keep the largest gap per distance
  std::vector<Modulus::Point> uniq;
  for (const auto& p : pts) {
    if (!uniq.empty() && uniq.back().first == p.first) {
      uniq.back().second = std::max(uniq.back().second, p.second);
    } else {
      uniq.push_back(p);
    }
  }
  // upper hull, left to right
  std::vector<Modulus::Point> hull;
  for (const auto& p : uniq) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      // drop b when it lies on or below the chord a -> p
      const double cross = (b.first - a.first) * (p.second - a.second) -
                           (b.second - a.second) * (p.first - a.first);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }
  // truncate at the first maximum and flatten
  std::size_t top = 0;
  for (std::size_t i = 1; i < hull.size(); ++i) {
    if (hull[i].second > hull[top].second) top = i;
  }
  hull.resize(top + 1);
  return Modulus(std::move(hull), 0.0);
}

Modulus linear_fit(std::span<const Modulus::Point> scatter) {
  double offset = 0.0;
  for (const auto& [x, y] : scatter) {
    if (!(x >= 0.0)) throw StructuralError("negative distance in modulus scatter");
    if (x == 0.0) offset = std::max(offset, y);
  }
  double slope = 0.0;
  for (const auto& [x, y] : scatter) {
    if (x > 0.0) slope = std::max(slope, (y - offset) / x);
  }
  return Modulus::linear(slope, offset);
}

double max_excess(const Modulus& f, std::span<const Modulus::Point> scatter) {
  double out = -std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : scatter) out = std::max(out, y - f(x));
  return scatter.empty() ? 0.0 : out;
}

}  // namespace cebound
