#include "cebound/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cebound/errors.hpp"
#include "cebound/transport.hpp"

namespace cebound {

CostTable::CostTable(std::size_t steps, std::size_t states, std::size_t actions,
                     std::vector<double> data)
    : steps_(steps), states_(states), actions_(actions), data_(std::move(data)) {
  if (data_.size() != steps * states * actions) {
    throw StructuralError("cost table has " + std::to_string(data_.size()) +
                          " entries, expected " + std::to_string(steps * states * actions));
  }
  for (double c : data_) {
    if (!std::isfinite(c)) throw InvariantViolation("non-finite cost");
  }
}

double CostTable::max_abs() const {
  double out = 0.0;
  for (double c : data_) out = std::max(out, std::abs(c));
  return out;
}

Mdp::Mdp(MetricSpace states, std::size_t actions, Kernel transitions, CostTable costs,
         std::size_t horizon)
    : states_(std::move(states)), actions_(actions), transitions_(std::move(transitions)),
      costs_(std::move(costs)), horizon_(horizon) {
  if (horizon_ == 0) throw StructuralError("horizon must be positive");
  if (actions_ == 0) throw StructuralError("action set is empty");
  const std::size_t n = states_.size();
  if (n == 0) throw StructuralError("state space is empty");
  if (transitions_.steps() != horizon_ - 1 || transitions_.sources() != n ||
      transitions_.targets() != n || (horizon_ > 1 && transitions_.actions() != actions_)) {
    throw StructuralError("MDP kernel shape does not match (T-1, |S|, |A|, |S|)");
  }
  if (costs_.steps() != horizon_ || costs_.states() != n || costs_.actions() != actions_) {
    throw StructuralError("MDP cost table shape does not match (T, |S|, |A|)");
  }
  cost_bound_ = costs_.max_abs();
}

MdpSolution backward_induction(const Mdp& m) {
  const std::size_t T = m.horizon();
  const std::size_t n = m.num_states();
  const std::size_t na = m.num_actions();
  MdpSolution sol;
  sol.values.assign(T + 1, std::vector<double>(n, 0.0));
  sol.policy.action.assign(T, std::vector<std::size_t>(n, 0));
  for (std::size_t k = T; k-- > 0;) {
    for (std::size_t s = 0; s < n; ++s) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t a = 0; a < na; ++a) {
        double q = m.cost(k, s, a);
        if (k + 1 < T) {
          auto row = m.transitions().row(k, s, a);
          for (std::size_t s2 = 0; s2 < n; ++s2) q += row[s2] * sol.values[k + 1][s2];
        }
        if (q < best) {
          best = q;
          arg = a;
        }
      }
      sol.values[k][s] = best;
      sol.policy.action[k][s] = arg;
    }
  }
  return sol;
}

ValueFunctions evaluate_markov_policy(const Mdp& m, const MarkovPolicy& pi) {
  const std::size_t T = m.horizon();
  const std::size_t n = m.num_states();
  if (pi.action.size() != T) {
    throw StructuralError("policy covers " + std::to_string(pi.action.size()) +
                          " steps, horizon is " + std::to_string(T));
  }
  ValueFunctions v(T + 1, std::vector<double>(n, 0.0));
  for (std::size_t k = T; k-- > 0;) {
    if (pi.action[k].size() != n) {
      throw StructuralError("policy at step " + std::to_string(k) + " is not total over states");
    }
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t a = pi.action[k][s];
      if (a >= m.num_actions()) throw StructuralError("policy names an invalid action");
      double q = m.cost(k, s, a);
      if (k + 1 < T) {
        auto row = m.transitions().row(k, s, a);
        for (std::size_t s2 = 0; s2 < n; ++s2) q += row[s2] * v[k + 1][s2];
      }
      v[k][s] = q;
    }
  }
  return v;
}

double lipschitz_of(std::span<const double> values, const MetricSpace& space) {
  if (values.size() != space.size()) throw StructuralError("value vector does not match space");
  double out = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      const double gap = std::abs(values[i] - values[j]);
      const double d = space(i, j);
      if (d > 0.0) {
        out = std::max(out, gap / d);
      } else if (gap > 0.0) {
        return std::numeric_limits<double>::infinity();
      }
    }
  }
  return out;
}

LinearConstants mdp_lipschitz_constants(const Mdp& m) {
  const std::size_t T = m.horizon();
  const std::size_t n = m.num_states();
  const auto& space = m.states();
  LinearConstants out;
  out.cost.assign(T, 0.0);
  out.dynamics.assign(T, 0.0);
  for (std::size_t k = 0; k < T; ++k) {
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t s2 = s + 1; s2 < n; ++s2) {
        const double d = space(s, s2);
        for (std::size_t a = 0; a < m.num_actions(); ++a) {
          const double gap = std::abs(m.cost(k, s, a) - m.cost(k, s2, a));
          double kgap = 0.0;
          if (k + 1 < T) kgap = w1(m.transitions().row(k, s, a), m.transitions().row(k, s2, a), space);
          if (d > 0.0) {
            out.cost[k] = std::max(out.cost[k], gap / d);
            out.dynamics[k] = std::max(out.dynamics[k], kgap / d);
          } else {
            if (gap > 0.0) out.cost[k] = std::numeric_limits<double>::infinity();
            if (kgap > 1e-12) out.dynamics[k] = std::numeric_limits<double>::infinity();
          }
        }
      }
    }
  }
  return out;
}

std::vector<double> recursive_lipschitz_bound(const LinearConstants& c, std::size_t horizon) {
  std::vector<double> out(horizon + 1, 0.0);
  for (std::size_t k = horizon; k-- > 0;) {
    out[k] = c.cost.at(k);
    if (k + 1 < horizon) out[k] += c.dynamics.at(k) * out[k + 1];
  }
  return out;
}

}  // namespace cebound
