#include "cebound/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cebound/errors.hpp"

namespace cebound {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) {
      throw StructuralError("ragged matrix: row " + std::to_string(i) + " has " +
                            std::to_string(rows[i].size()) + " entries, expected " +
                            std::to_string(c));
    }
    std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + i * c);
  }
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

const char* to_string(MetricAxiom axiom) {
  switch (axiom) {
    case MetricAxiom::kZeroDiagonal: return "zero-diagonal";
    case MetricAxiom::kNonNegative: return "non-negativity";
    case MetricAxiom::kSymmetry: return "symmetry";
    case MetricAxiom::kTriangle: return "triangle";
  }
  return "unknown";
}

std::string MetricViolation::describe() const {
  std::ostringstream os;
  os << to_string(axiom) << " violation at ";
  switch (axiom) {
    case MetricAxiom::kZeroDiagonal: os << "(" << i << ")"; break;
    case MetricAxiom::kNonNegative:
    case MetricAxiom::kSymmetry: os << "(" << i << "," << k << ")"; break;
    case MetricAxiom::kTriangle: os << "(" << i << "," << via << "," << k << ")"; break;
  }
  return os.str();
}

std::vector<MetricViolation> validate_metric(const Matrix& d, double tol) {
  if (d.rows() != d.cols()) {
    throw StructuralError("distance matrix is " + std::to_string(d.rows()) + "x" +
                          std::to_string(d.cols()) + ", expected square");
  }
  const std::size_t n = d.rows();
  std::vector<MetricViolation> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(d(i, i)) > tol) out.push_back({MetricAxiom::kZeroDiagonal, i, i, i});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (i != k && d(i, k) < -tol) out.push_back({MetricAxiom::kNonNegative, i, i, k});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      if (std::abs(d(i, k) - d(k, i)) > tol) out.push_back({MetricAxiom::kSymmetry, i, i, k});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || j == k) continue;
        if (d(i, k) > d(i, j) + d(j, k) + tol) out.push_back({MetricAxiom::kTriangle, i, j, k});
      }
    }
  }
  return out;
}

std::vector<MetricViolation> validate_metric(const std::vector<std::vector<double>>& dist,
                                             double tol) {
  for (const auto& row : dist) {
    if (row.size() != dist.size()) {
      throw StructuralError("distance matrix is not square");
    }
  }
  return validate_metric(Matrix::from_rows(dist), tol);
}

MetricSpace::MetricSpace(std::vector<std::string> labels, Matrix dist, double tol)
    : labels_(std::move(labels)), dist_(std::move(dist)) {
  if (dist_.rows() != labels_.size()) {
    throw StructuralError("metric space has " + std::to_string(labels_.size()) +
                          " labels but a " + std::to_string(dist_.rows()) + "-row matrix");
  }
  auto violations = validate_metric(dist_, tol);
  if (!violations.empty()) {
    std::string msg = "invalid metric:";
    for (std::size_t v = 0; v < violations.size() && v < 8; ++v) {
      msg += " " + violations[v].describe() + ";";
    }
    throw InvariantViolation(msg);
  }
}

namespace {
std::vector<std::string> index_labels(std::size_t n) {
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::to_string(i);
  return out;
}
}  // namespace

MetricSpace MetricSpace::discrete(std::size_t n) {
  Matrix d(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) d(i, i) = 0.0;
  return MetricSpace(index_labels(n), std::move(d));
}

MetricSpace MetricSpace::path(std::size_t n, double step) {
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d(i, j) = step * std::abs(static_cast<double>(i) - static_cast<double>(j));
    }
  }
  return MetricSpace(index_labels(n), std::move(d));
}

MetricSpace MetricSpace::ring(std::size_t n) {
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t gap = i > j ? i - j : j - i;
      d(i, j) = static_cast<double>(std::min(gap, n - gap));
    }
  }
  return MetricSpace(index_labels(n), std::move(d));
}

double MetricSpace::diameter() const {
  double out = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) out = std::max(out, dist_(i, j));
  }
  return out;
}

MetricSpace MetricSpace::restrict_to(std::span<const std::size_t> points) const {
  std::vector<std::string> labels;
  Matrix d(points.size(), points.size());
  for (std::size_t a = 0; a < points.size(); ++a) {
    labels.push_back(labels_.at(points[a]));
    for (std::size_t b = 0; b < points.size(); ++b) d(a, b) = dist_(points[a], points[b]);
  }
  return MetricSpace(std::move(labels), std::move(d));
}

bool is_probability(std::span<const double> mass, double tol) {
  if (mass.empty()) return false;
  double total = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0) || !std::isfinite(m)) return false;
    total += m;
  }
  return std::abs(total - 1.0) <= tol;
}

Dist::Dist(std::vector<double> mass, double tol) : mass_(std::move(mass)) {
  if (!is_probability(mass_, tol)) {
    double total = std::accumulate(mass_.begin(), mass_.end(), 0.0);
    throw InvariantViolation("not a probability vector (size " + std::to_string(mass_.size()) +
                             ", total mass " + std::to_string(total) + ")");
  }
}

Dist Dist::point(std::size_t n, std::size_t at) {
  if (at >= n) throw StructuralError("point mass index out of range");
  std::vector<double> m(n, 0.0);
  m[at] = 1.0;
  return Dist(std::move(m));
}

Dist Dist::uniform(std::size_t n) {
  if (n == 0) throw StructuralError("uniform distribution over an empty set");
  return Dist::normalized(std::vector<double>(n, 1.0));
}

Dist Dist::normalized(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvariantViolation("negative or non-finite weight");
    total += w;
  }
  if (!(total > 0.0)) throw InvariantViolation("cannot normalize a zero vector");
  for (double& w : weights) w /= total;
  return Dist(std::move(weights), 1e-9);
}

double Dist::expect(std::span<const double> f) const {
  if (f.size() != mass_.size()) throw StructuralError("expectation of a mis-sized function");
  double out = 0.0;
  for (std::size_t i = 0; i < mass_.size(); ++i) out += mass_[i] * f[i];
  return out;
}

std::vector<std::size_t> support(std::span<const double> mass, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (mass[i] > tol) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> support(const Dist& d, double tol) { return support(d.mass(), tol); }

Dist mix(std::span<const double> weights, std::span<const Dist> components) {
  if (weights.size() != components.size() || components.empty()) {
    throw StructuralError("mixture weights and components differ in length");
  }
  std::vector<double> out(components.front().size(), 0.0);
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (components[k].size() != out.size()) throw StructuralError("mixture over different sets");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights[k] * components[k][i];
  }
  return Dist(std::move(out), 1e-9);
}

Kernel::Kernel(std::size_t steps, std::size_t sources, std::size_t actions, std::size_t targets,
               std::vector<double> data, double tol)
    : steps_(steps), sources_(sources), actions_(actions), targets_(targets),
      data_(std::move(data)) {
  if (data_.size() != steps * sources * actions * targets) {
    throw StructuralError("kernel data has " + std::to_string(data_.size()) +
                          " entries, expected " +
                          std::to_string(steps * sources * actions * targets));
  }
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t s = 0; s < sources; ++s) {
      for (std::size_t a = 0; a < actions; ++a) {
        if (!is_probability(row(k, s, a), tol)) {
          throw InvariantViolation("kernel row (step " + std::to_string(k) + ", source " +
                                   std::to_string(s) + ", action " + std::to_string(a) +
                                   ") is not a probability vector");
        }
      }
    }
  }
}

}  // namespace cebound
