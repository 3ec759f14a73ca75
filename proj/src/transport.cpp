#include "cebound/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "cebound/errors.hpp"

namespace cebound {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

double max_abs(const Matrix& m) {
  double out = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (double v : m.row(i)) out = std::max(out, std::abs(v));
  }
  return out;
}

void check_balanced(const TransportProblem& p) {
  if (p.cost.rows() != p.supply.size() || p.cost.cols() != p.demand.size()) {
    throw StructuralError("transport cost matrix does not match supply/demand sizes");
  }
  double s = 0.0, d = 0.0;
  for (double x : p.supply) {
    if (x < 0.0) throw InvariantViolation("negative supply");
    s += x;
  }
  for (double x : p.demand) {
    if (x < 0.0) throw InvariantViolation("negative demand");
    d += x;
  }
  if (std::abs(s - d) > 1e-9 * std::max(1.0, s)) {
    throw InvariantViolation("unbalanced transport problem");
  }
}

struct Cell {
  std::size_t i;
  std::size_t j;
};

// Solves min c.x s.t. A x = b, x >= 0 with a two-phase tableau and Bland's
// rule. Rows with negative right-hand side are flipped internally; the duals
// returned refer to the original rows.
struct DenseLpResult {
  double value = 0.0;
  std::vector<double> x;
  std::vector<double> y;
};

DenseLpResult dense_simplex(const Matrix& a, std::vector<double> b, const std::vector<double>& c) {
  const std::size_t rows = a.rows();
  const std::size_t vars = a.cols();
  const std::size_t cols = vars + rows;  // structural + artificial
  std::vector<double> sign(rows, 1.0);
  Matrix tab(rows, cols + 1);
  for (std::size_t r = 0; r < rows; ++r) {
    if (b[r] < 0.0) sign[r] = -1.0;
    for (std::size_t j = 0; j < vars; ++j) tab(r, j) = sign[r] * a(r, j);
    tab(r, vars + r) = 1.0;
    tab(r, cols) = sign[r] * b[r];
  }
  std::vector<std::size_t> basis(rows);
  for (std::size_t r = 0; r < rows; ++r) basis[r] = vars + r;

  const double scale = std::max(1.0, max_abs(a));
  const double eps = 1e-11 * scale;

  auto pivot = [&](std::size_t pr, std::size_t pc) {
    const double pv = tab(pr, pc);
    for (std::size_t j = 0; j <= cols; ++j) tab(pr, j) /= pv;
    for (std::size_t r = 0; r < rows; ++r) {
      if (r == pr) continue;
      const double f = tab(r, pc);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols; ++j) tab(r, j) -= f * tab(pr, j);
      tab(r, pc) = 0.0;
    }
    basis[pr] = pc;
  };

  // cost vector over all columns; `allowed` bounds the entering candidates
  auto run = [&](const std::vector<double>& cost, std::size_t allowed) {
    for (std::size_t iter = 0;; ++iter) {
      if (iter > 200000) throw Error("dense simplex iteration limit");
      std::size_t enter = kNone;
      for (std::size_t j = 0; j < allowed && enter == kNone; ++j) {
        double rc = cost[j];
        for (std::size_t r = 0; r < rows; ++r) rc -= cost[basis[r]] * tab(r, j);
        if (rc < -eps) enter = j;
      }
      if (enter == kNone) return;
      std::size_t leave = kNone;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows; ++r) {
        if (tab(r, enter) > eps) {
          const double ratio = tab(r, cols) / tab(r, enter);
          if (ratio < best - 1e-15 ||
              (std::abs(ratio - best) <= 1e-15 && leave != kNone && basis[r] < basis[leave])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave == kNone) throw Error("dense simplex: unbounded problem");
      pivot(leave, enter);
    }
  };

  std::vector<double> phase1(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) phase1[vars + r] = 1.0;
  run(phase1, vars);
  double infeas = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (basis[r] >= vars) infeas += tab(r, cols);
  }
  if (infeas > 1e-9 * std::max(1.0, scale)) throw Error("dense simplex: infeasible problem");
  // Drive zero-level artificials out of the basis where possible.
  for (std::size_t r = 0; r < rows; ++r) {
    if (basis[r] < vars) continue;
    for (std::size_t j = 0; j < vars; ++j) {
      if (std::abs(tab(r, j)) > eps) {
        pivot(r, j);
        break;
      }
    }
  }
  std::vector<double> phase2(cols, 0.0);
  for (std::size_t j = 0; j < vars; ++j) phase2[j] = c[j];
  run(phase2, vars);

  DenseLpResult out;
  out.x.assign(vars, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (basis[r] < vars) out.x[basis[r]] = tab(r, cols);
  }
  for (std::size_t j = 0; j < vars; ++j) out.value += c[j] * out.x[j];
  // y^T = c_B^T B^{-1}; B^{-1} sits in the artificial block of the tableau.
  out.y.assign(rows, 0.0);
  for (std::size_t k = 0; k < rows; ++k) {
    double yk = 0.0;
    for (std::size_t r = 0; r < rows; ++r) yk += phase2[basis[r]] * tab(r, vars + k);
    out.y[k] = yk * sign[k];
  }
  return out;
}

// Solves a problem whose supply and demand entries are all positive.
TransportSolution network_simplex(const TransportProblem& p) {
  const std::size_t m = p.supply.size();
  const std::size_t n = p.demand.size();
  TransportSolution sol;
  sol.flow = Matrix(m, n);
  sol.u.assign(m, 0.0);
  sol.v.assign(n, 0.0);
  if (m == 0 || n == 0) return sol;

  Matrix& x = sol.flow;
  std::vector<Cell> basis;
  basis.reserve(m + n - 1);
  {
    std::vector<double> ra = p.supply, rb = p.demand;
    std::size_t i = 0, j = 0;
    while (true) {
      const double q = (i == m - 1 && j == n - 1) ? ra[i] : std::min(ra[i], rb[j]);
      x(i, j) = std::max(q, 0.0);
      basis.push_back({i, j});
      ra[i] -= q;
      rb[j] -= q;
      if (i == m - 1 && j == n - 1) break;
      if (i == m - 1) {
        ++j;
      } else if (j == n - 1) {
        ++i;
      } else if (ra[i] <= rb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  const double eps = 1e-12 * std::max(1.0, max_abs(p.cost));
  std::vector<std::vector<std::size_t>> adj(m + n);  // node -> basis cell indices
  std::vector<std::size_t> parent_cell(m + n);
  std::vector<char> seen(m + n);
  std::vector<char> is_basic(m * n);
  const std::size_t max_iter = 50 * (m + n) * (m + n) + 1000;

  for (std::size_t iter = 0;; ++iter) {
    if (iter > max_iter) throw Error("network simplex iteration limit");
    for (auto& a : adj) a.clear();
    std::fill(is_basic.begin(), is_basic.end(), 0);
    for (std::size_t b = 0; b < basis.size(); ++b) {
      adj[basis[b].i].push_back(b);
      adj[m + basis[b].j].push_back(b);
      is_basic[basis[b].i * n + basis[b].j] = 1;
    }
    // potentials: u_i + v_j = c_ij on the basis tree
    std::fill(seen.begin(), seen.end(), 0);
    std::deque<std::size_t> queue{0};
    seen[0] = 1;
    sol.u[0] = 0.0;
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t b : adj[node]) {
        const Cell c = basis[b];
        const std::size_t other = node < m ? m + c.j : c.i;
        if (seen[other]) continue;
        seen[other] = 1;
        if (node < m) {
          sol.v[c.j] = p.cost(c.i, c.j) - sol.u[c.i];
        } else {
          sol.u[c.i] = p.cost(c.i, c.j) - sol.v[c.j];
        }
        queue.push_back(other);
      }
    }
    // Dantzig pricing
    Cell enter{kNone, kNone};
    double best = -eps;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (is_basic[i * n + j]) continue;
        const double rc = p.cost(i, j) - sol.u[i] - sol.v[j];
        if (rc < best) {
          best = rc;
          enter = {i, j};
        }
      }
    }
    if (enter.i == kNone) break;

    // tree path from row node enter.i to column node m + enter.j
    std::fill(seen.begin(), seen.end(), 0);
    std::fill(parent_cell.begin(), parent_cell.end(), kNone);
    queue = {enter.i};
    seen[enter.i] = 1;
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      if (node == m + enter.j) break;
      for (std::size_t b : adj[node]) {
        const Cell c = basis[b];
        const std::size_t other = node < m ? m + c.j : c.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_cell[other] = b;
        queue.push_back(other);
      }
    }
    std::vector<std::size_t> path;  // basis indices, starting next to the column node
    for (std::size_t node = m + enter.j; node != enter.i;) {
      const std::size_t b = parent_cell[node];
      path.push_back(b);
      const Cell c = basis[b];
      node = node < m ? m + c.j : c.i;
    }
    // odd positions (0, 2, ...) lose flow
    std::size_t leave = kNone;
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Cell c = basis[path[k]];
      if (x(c.i, c.j) < theta) {
        theta = x(c.i, c.j);
        leave = k;
      }
    }
    theta = std::max(theta, 0.0);
    x(enter.i, enter.j) = theta;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Cell c = basis[path[k]];
      x(c.i, c.j) += (k % 2 == 0) ? -theta : theta;
      if (x(c.i, c.j) < 0.0) x(c.i, c.j) = 0.0;
    }
    const std::size_t out = path[leave];
    x(basis[out].i, basis[out].j) = 0.0;
    basis[out] = enter;
  }

  sol.value = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) sol.value += x(i, j) * p.cost(i, j);
  }
  return sol;
}

// Drops zero-mass rows and columns, solves, and scatters the result back.
template <typename Solver>
TransportSolution solve_reduced(const TransportProblem& p, Solver&& solver) {
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < p.supply.size(); ++i) {
    if (p.supply[i] > 0.0) rows.push_back(i);
  }
  for (std::size_t j = 0; j < p.demand.size(); ++j) {
    if (p.demand[j] > 0.0) cols.push_back(j);
  }
  TransportProblem r;
  r.cost = Matrix(rows.size(), cols.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    r.supply.push_back(p.supply[rows[a]]);
    for (std::size_t b = 0; b < cols.size(); ++b) r.cost(a, b) = p.cost(rows[a], cols[b]);
  }
  for (std::size_t j : cols) r.demand.push_back(p.demand[j]);
  TransportSolution rs = solver(r);

  TransportSolution out;
  out.value = rs.value;
  out.flow = Matrix(p.supply.size(), p.demand.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) out.flow(rows[a], cols[b]) = rs.flow(a, b);
  }
  // Zero-mass nodes get the tightest prices that keep dual feasibility.
  out.u.assign(p.supply.size(), 0.0);
  out.v.assign(p.demand.size(), 0.0);
  std::vector<char> has_v(p.demand.size(), 0), has_u(p.supply.size(), 0);
  for (std::size_t b = 0; b < cols.size(); ++b) {
    out.v[cols[b]] = rs.v[b];
    has_v[cols[b]] = 1;
  }
  for (std::size_t a = 0; a < rows.size(); ++a) {
    out.u[rows[a]] = rs.u[a];
    has_u[rows[a]] = 1;
  }
  for (std::size_t i = 0; i < p.supply.size(); ++i) {
    if (has_u[i]) continue;
    double u = std::numeric_limits<double>::infinity();
    for (std::size_t j : cols) u = std::min(u, p.cost(i, j) - out.v[j]);
    out.u[i] = std::isfinite(u) ? u : 0.0;
  }
  for (std::size_t j = 0; j < p.demand.size(); ++j) {
    if (has_v[j]) continue;
    double v = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.supply.size(); ++i) v = std::min(v, p.cost(i, j) - out.u[i]);
    out.v[j] = std::isfinite(v) ? v : 0.0;
  }
  return out;
}

TransportSolution dense_as_solution(const TransportProblem& p) {
  const std::size_t m = p.supply.size();
  const std::size_t n = p.demand.size();
  TransportSolution sol;
  sol.flow = Matrix(m, n);
  sol.u.assign(m, 0.0);
  sol.v.assign(n, 0.0);
  if (m == 0 || n == 0) return sol;
  // Rows: m supplies then n - 1 demands (the last demand row is implied).
  const std::size_t rows = m + n - 1;
  Matrix a(rows, m * n);
  std::vector<double> b(rows), c(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    b[i] = p.supply[i];
    for (std::size_t j = 0; j < n; ++j) {
      a(i, i * n + j) = 1.0;
      if (j + 1 < n) a(m + j, i * n + j) = 1.0;
      c[i * n + j] = p.cost(i, j);
    }
  }
  for (std::size_t j = 0; j + 1 < n; ++j) b[m + j] = p.demand[j];
  DenseLpResult lp = dense_simplex(a, b, c);
  sol.value = lp.value;
  for (std::size_t i = 0; i < m; ++i) {
    sol.u[i] = lp.y[i];
    for (std::size_t j = 0; j < n; ++j) sol.flow(i, j) = lp.x[i * n + j];
  }
  for (std::size_t j = 0; j + 1 < n; ++j) sol.v[j] = lp.y[m + j];
  return sol;
}

TransportProblem metric_problem(std::span<const double> mu, std::span<const double> nu,
                                const MetricSpace& space) {
  if (mu.size() != space.size() || nu.size() != space.size()) {
    throw StructuralError("w1: distributions of size " + std::to_string(mu.size()) + " and " +
                          std::to_string(nu.size()) + " on a space of size " +
                          std::to_string(space.size()));
  }
  // Mass shared by both sides stays in place at zero cost.
  TransportProblem p;
  p.supply.resize(mu.size());
  p.demand.resize(nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double common = std::min(mu[i], nu[i]);
    p.supply[i] = mu[i] - common;
    p.demand[i] = nu[i] - common;
  }
  // Re-balance rounding drift so both sides carry identical totals.
  double s = 0.0, d = 0.0;
  for (double x : p.supply) s += x;
  for (double x : p.demand) d += x;
  if (s > 0.0 && d > 0.0) {
    for (double& x : p.demand) x *= s / d;
  } else {
    std::fill(p.supply.begin(), p.supply.end(), 0.0);
    std::fill(p.demand.begin(), p.demand.end(), 0.0);
  }
  p.cost = space.matrix();
  return p;
}

TransportSolution solve_metric(std::span<const double> mu, std::span<const double> nu,
                               const MetricSpace& space) {
  TransportProblem p = metric_problem(mu, nu, space);
  std::size_t m = 0, n = 0;
  for (double x : p.supply) m += x > 0.0;
  for (double x : p.demand) n += x > 0.0;
  if (std::max(m, n) <= kNetworkSimplexMaxSupport) {
    return solve_reduced(p, network_simplex);
  }
  return solve_reduced(p, dense_as_solution);
}

}  // namespace

TransportSolution solve_transport_simplex(const TransportProblem& problem) {
  check_balanced(problem);
  return solve_reduced(problem, network_simplex);
}

double solve_transport_dense_lp(const TransportProblem& problem) {
  check_balanced(problem);
  return solve_reduced(problem, dense_as_solution).value;
}

double w1(std::span<const double> mu, std::span<const double> nu, const MetricSpace& space) {
  return std::max(0.0, solve_metric(mu, nu, space).value);
}

double w1(const Dist& mu, const Dist& nu, const MetricSpace& space) {
  return w1(mu.mass(), nu.mass(), space);
}

std::vector<double> w1_potential(const Dist& mu, const Dist& nu, const MetricSpace& space) {
  const TransportSolution sol = solve_metric(mu.mass(), nu.mass(), space);
  TransportProblem p = metric_problem(mu.mass(), nu.mass(), space);
  const std::size_t n = space.size();
  std::vector<double> f(n, 0.0);
  bool any_sink = false;
  for (std::size_t j = 0; j < n; ++j) any_sink = any_sink || p.demand[j] > 0.0;
  if (!any_sink) return f;
  // c-transform against the sink prices: f(x) = min_j d(x, y_j) - v_j.
  for (std::size_t x = 0; x < n; ++x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (p.demand[j] > 0.0) best = std::min(best, space(x, j) - sol.v[j]);
    }
    f[x] = best;
  }
  return f;
}

double w1_convexity_residual(std::span<const double> weights,
                             std::span<const std::pair<Dist, Dist>> components,
                             const MetricSpace& space) {
  if (weights.size() != components.size() || components.empty()) {
    throw StructuralError("convexity residual: weights and components differ in length");
  }
  if (!is_probability(weights, 1e-9)) throw InvariantViolation("mixture weights are not a Dist");
  std::vector<double> mu(space.size(), 0.0), nu(space.size(), 0.0);
  double lhs = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& [a, b] = components[k];
    lhs += weights[k] * w1(a, b, space);
    for (std::size_t i = 0; i < space.size(); ++i) {
      mu[i] += weights[k] * a[i];
      nu[i] += weights[k] * b[i];
    }
  }
  return lhs - w1(mu, nu, space);
}

}  // namespace cebound
