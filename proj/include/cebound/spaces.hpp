#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cebound {

/// Tolerance used for probability normalization and metric axioms unless a
/// caller passes its own.
inline constexpr double kDefaultTol = 1e-12;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::vector<std::vector<double>> to_rows() const;
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class MetricAxiom { kZeroDiagonal, kNonNegative, kSymmetry, kTriangle };

const char* to_string(MetricAxiom axiom);

/// One failed metric axiom. For the triangle inequality, `via` is the
/// intermediate point: dist(i, k) > dist(i, via) + dist(via, k).
struct MetricViolation {
  MetricAxiom axiom;
  std::size_t i = 0;
  std::size_t via = 0;
  std::size_t k = 0;
  std::string describe() const;
  bool operator==(const MetricViolation&) const = default;
};

/// Checks every metric axiom exhaustively. Throws StructuralError when the
/// input is not square. Triangle violations are reported once per unordered
/// endpoint pair (i < k).
std::vector<MetricViolation> validate_metric(const std::vector<std::vector<double>>& dist,
                                             double tol = kDefaultTol);
std::vector<MetricViolation> validate_metric(const Matrix& dist, double tol = kDefaultTol);

/// Finite metric (or pseudo-metric) space with named points.
class MetricSpace {
 public:
  MetricSpace() = default;
  /// Throws InvariantViolation listing the failed axioms.
  MetricSpace(std::vector<std::string> labels, Matrix dist, double tol = kDefaultTol);

  /// Discrete metric: 1 between distinct points.
  static MetricSpace discrete(std::size_t n);
  /// Points 0..n-1 on a line scaled by `step`.
  static MetricSpace path(std::size_t n, double step = 1.0);
  /// Points 0..n-1 on a cycle with the shortest-arc distance.
  static MetricSpace ring(std::size_t n);

  std::size_t size() const noexcept { return labels_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return dist_(i, j); }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const Matrix& matrix() const noexcept { return dist_; }
  double diameter() const;

  /// Sub-space on the given points, keeping their labels and distances.
  MetricSpace restrict_to(std::span<const std::size_t> points) const;

  bool operator==(const MetricSpace&) const = default;

 private:
  std::vector<std::string> labels_;
  Matrix dist_;
};

/// Probability vector over a finite index set.
class Dist {
 public:
  Dist() = default;
  /// Throws InvariantViolation unless entries are non-negative and sum to one
  /// within `tol`.
  explicit Dist(std::vector<double> mass, double tol = kDefaultTol);

  static Dist point(std::size_t n, std::size_t at);
  static Dist uniform(std::size_t n);
  /// Rescales non-negative weights to unit mass. Throws InvariantViolation on
  /// negative entries or zero total.
  static Dist normalized(std::vector<double> weights);

  std::size_t size() const noexcept { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_[i]; }
  std::span<const double> mass() const noexcept { return mass_; }
  double expect(std::span<const double> f) const;
  bool operator==(const Dist&) const = default;

 private:
  std::vector<double> mass_;
};

/// Indices whose mass exceeds `tol`.
std::vector<std::size_t> support(const Dist& d, double tol = kDefaultTol);
std::vector<std::size_t> support(std::span<const double> mass, double tol = kDefaultTol);

/// Mixture sum_k w_k d_k of distributions over the same index set.
Dist mix(std::span<const double> weights, std::span<const Dist> components);

/// Time-indexed stochastic kernel: for each step, each source index and each
/// action, a distribution over a target set. Steps are 0-based.
class Kernel {
 public:
  Kernel() = default;
  /// `data` is laid out [step][source][action][target]. Every row must be a
  /// probability vector; zero rows are rejected.
  Kernel(std::size_t steps, std::size_t sources, std::size_t actions, std::size_t targets,
         std::vector<double> data, double tol = kDefaultTol);

  std::size_t steps() const noexcept { return steps_; }
  std::size_t sources() const noexcept { return sources_; }
  std::size_t actions() const noexcept { return actions_; }
  std::size_t targets() const noexcept { return targets_; }

  std::span<const double> row(std::size_t step, std::size_t source, std::size_t action) const {
    return {data_.data() + offset(step, source, action), targets_};
  }
  double operator()(std::size_t step, std::size_t source, std::size_t action,
                    std::size_t target) const {
    return data_[offset(step, source, action) + target];
  }
  const std::vector<double>& data() const noexcept { return data_; }
  bool operator==(const Kernel&) const = default;

 private:
  std::size_t offset(std::size_t step, std::size_t source, std::size_t action) const {
    return ((step * sources_ + source) * actions_ + action) * targets_;
  }

  std::size_t steps_ = 0;
  std::size_t sources_ = 0;
  std::size_t actions_ = 0;
  std::size_t targets_ = 0;
  std::vector<double> data_;
};

/// Checks that a span is a probability vector within `tol`.
bool is_probability(std::span<const double> mass, double tol = kDefaultTol);

}  // namespace cebound
