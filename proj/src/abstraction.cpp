#include "cebound/abstraction.hpp"

#include "cebound/errors.hpp"

namespace cebound {

Abstraction::Abstraction(std::size_t source_size, MetricSpace target, std::vector<std::size_t> phi,
                         std::vector<Dist> lambda_p, std::vector<Dist> lambda_c)
    : target_(std::move(target)), phi_(std::move(phi)), lambda_p_(std::move(lambda_p)),
      lambda_c_(std::move(lambda_c)) {
  if (phi_.size() != source_size) throw StructuralError("phi must be defined on every state");
  const std::size_t k = target_.size();
  if (lambda_p_.size() != k || lambda_c_.size() != k) {
    throw StructuralError("one lifting distribution per abstract state is required");
  }
  std::vector<char> hit(k, 0);
  for (std::size_t s = 0; s < phi_.size(); ++s) {
    if (phi_[s] >= k) throw StructuralError("phi maps outside the abstract space");
    hit[phi_[s]] = 1;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (!hit[c]) {
      throw InvariantViolation("abstract state " + std::to_string(c) + " has an empty fiber");
    }
    for (const auto* lam : {&lambda_p_[c], &lambda_c_[c]}) {
      if (lam->size() != source_size) throw StructuralError("lifting kernel of the wrong size");
      for (std::size_t s = 0; s < source_size; ++s) {
        if ((*lam)[s] > 0.0 && phi_[s] != c) {
          throw InvariantViolation("lifting kernel of abstract state " + std::to_string(c) +
                                   " puts mass on state " + std::to_string(s) +
                                   " outside its fiber");
        }
      }
    }
  }
}

Abstraction Abstraction::identity(const MetricSpace& space) {
  const std::size_t n = space.size();
  std::vector<std::size_t> phi(n);
  std::vector<Dist> lam;
  for (std::size_t s = 0; s < n; ++s) {
    phi[s] = s;
    lam.push_back(Dist::point(n, s));
  }
  return Abstraction(n, space, std::move(phi), lam, lam);
}

namespace {

void check_partition(const MetricSpace& source, const std::vector<std::size_t>& cell_of,
                     const std::vector<std::size_t>& reps) {
  if (cell_of.size() != source.size()) throw StructuralError("cell assignment must cover S");
  for (std::size_t c = 0; c < reps.size(); ++c) {
    if (reps[c] >= source.size() || cell_of[reps[c]] != c) {
      throw InvariantViolation("representative of cell " + std::to_string(c) +
                               " does not lie in that cell");
    }
  }
}

}  // namespace

Abstraction Abstraction::quantization(const MetricSpace& source, std::vector<std::size_t> cell_of,
                                      std::vector<std::size_t> representatives) {
  check_partition(source, cell_of, representatives);
  std::vector<Dist> lam;
  for (std::size_t r : representatives) lam.push_back(Dist::point(source.size(), r));
  return Abstraction(source.size(), source.restrict_to(representatives), std::move(cell_of), lam,
                     lam);
}

Abstraction Abstraction::quantization_uniform(const MetricSpace& source,
                                              std::vector<std::size_t> cell_of,
                                              std::vector<std::size_t> representatives) {
  check_partition(source, cell_of, representatives);
  std::vector<Dist> lam;
  for (std::size_t c = 0; c < representatives.size(); ++c) {
    std::vector<double> w(source.size(), 0.0);
    for (std::size_t s = 0; s < source.size(); ++s) w[s] = cell_of[s] == c ? 1.0 : 0.0;
    lam.push_back(Dist::normalized(std::move(w)));
  }
  return Abstraction(source.size(), source.restrict_to(representatives), std::move(cell_of), lam,
                     lam);
}

std::vector<std::size_t> Abstraction::fiber(std::size_t cell) const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < phi_.size(); ++s) {
    if (phi_[s] == cell) out.push_back(s);
  }
  return out;
}

Dist pushforward_kernel(const Mdp& m, const Abstraction& ab, std::size_t step, std::size_t s,
                        std::size_t a) {
  if (ab.source_size() != m.num_states()) {
    throw StructuralError("abstraction source does not match the MDP state space");
  }
  std::vector<double> out(ab.target_size(), 0.0);
  auto row = m.transitions().row(step, s, a);
  for (std::size_t s2 = 0; s2 < row.size(); ++s2) out[ab(s2)] += row[s2];
  return Dist(std::move(out), 1e-9);
}

Mdp build_abstract_mdp(const Mdp& m, const Abstraction& ab) {
  if (ab.source_size() != m.num_states()) {
    throw StructuralError("abstraction source does not match the MDP state space");
  }
  const std::size_t T = m.horizon();
  const std::size_t n = m.num_states();
  const std::size_t k = ab.target_size();
  const std::size_t na = m.num_actions();
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t s = 0; s < n; ++s) {
      if ((ab.lambda_p(c)[s] > 0.0 || ab.lambda_c(c)[s] > 0.0) && ab(s) != c) {
        throw InvariantViolation("lifting mass off the fiber of abstract state " +
                                 std::to_string(c));
      }
    }
  }
  std::vector<double> costs(T * k * na, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t a = 0; a < na; ++a) {
        double v = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
          const double w = ab.lambda_c(c)[s];
          if (w != 0.0) v += w * m.cost(t, s, a);
        }
        costs[(t * k + c) * na + a] = v;
      }
    }
  }
  const std::size_t steps = T - 1;
  std::vector<double> kern(steps * k * na * k, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t a = 0; a < na; ++a) {
        double* out = kern.data() + ((t * k + c) * na + a) * k;
        for (std::size_t s = 0; s < n; ++s) {
          const double w = ab.lambda_p(c)[s];
          if (w == 0.0) continue;
          auto row = m.transitions().row(t, s, a);
          for (std::size_t s2 = 0; s2 < n; ++s2) out[ab(s2)] += w * row[s2];
        }
      }
    }
  }
  return Mdp(ab.target(), na, Kernel(steps, k, na, k, std::move(kern), 1e-9),
             CostTable(T, k, na, std::move(costs)), T);
}

MarkovPolicy lift_policy(const MarkovPolicy& abstract_policy, const Abstraction& ab) {
  MarkovPolicy out;
  for (const auto& step : abstract_policy.action) {
    std::vector<std::size_t> row(ab.source_size());
    for (std::size_t s = 0; s < row.size(); ++s) row[s] = step.at(ab(s));
    out.action.push_back(std::move(row));
  }
  return out;
}

}  // namespace cebound
