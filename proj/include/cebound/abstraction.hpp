#pragma once

#include <cstddef>
#include <vector>

#include "cebound/mdp.hpp"
#include "cebound/spaces.hpp"

namespace cebound {

/// State abstraction phi: S -> S~ with lifting kernels lambda^P, lambda^c
/// (one distribution over S per abstract state, supported on its fiber).
class Abstraction {
 public:
  Abstraction() = default;
  /// Throws InvariantViolation if phi is not onto `target` or a lifting
  /// kernel puts mass outside its fiber.
  Abstraction(std::size_t source_size, MetricSpace target, std::vector<std::size_t> phi,
              std::vector<Dist> lambda_p, std::vector<Dist> lambda_c);

  /// phi(s) = s on `space`, lambda = Dirac at s.
  static Abstraction identity(const MetricSpace& space);

  /// Partition with one representative per cell; the target metric is the
  /// source metric restricted to the representatives and both lifting
  /// kernels are Dirac at the representative.
  static Abstraction quantization(const MetricSpace& source, std::vector<std::size_t> cell_of,
                                  std::vector<std::size_t> representatives);

  /// Same partition and target metric as `quantization`, with both lifting
  /// kernels uniform on each fiber.
  static Abstraction quantization_uniform(const MetricSpace& source,
                                          std::vector<std::size_t> cell_of,
                                          std::vector<std::size_t> representatives);

  std::size_t source_size() const noexcept { return phi_.size(); }
  std::size_t target_size() const noexcept { return target_.size(); }
  const MetricSpace& target() const noexcept { return target_; }
  std::size_t operator()(std::size_t s) const { return phi_.at(s); }
  const std::vector<std::size_t>& phi() const noexcept { return phi_; }
  const Dist& lambda_p(std::size_t cell) const { return lambda_p_.at(cell); }
  const Dist& lambda_c(std::size_t cell) const { return lambda_c_.at(cell); }
  const std::vector<Dist>& lambda_p() const noexcept { return lambda_p_; }
  const std::vector<Dist>& lambda_c() const noexcept { return lambda_c_; }
  std::vector<std::size_t> fiber(std::size_t cell) const;
  /// d_S~(phi(s), cell).
  double distance_to(std::size_t s, std::size_t cell) const { return target_(phi_.at(s), cell); }

 private:
  MetricSpace target_;
  std::vector<std::size_t> phi_;
  std::vector<Dist> lambda_p_;
  std::vector<Dist> lambda_c_;
};

/// P^phi(s~' | s, a) = sum over the fiber of s~' of P_k(s' | s, a).
Dist pushforward_kernel(const Mdp& m, const Abstraction& ab, std::size_t step, std::size_t s,
                        std::size_t a);

/// Abstract MDP over the target space: dynamics averaged under lambda^P of
/// the pushforward kernel, costs averaged under lambda^c.
Mdp build_abstract_mdp(const Mdp& m, const Abstraction& ab);

/// Composes an abstract Markov policy with phi.
MarkovPolicy lift_policy(const MarkovPolicy& abstract_policy, const Abstraction& ab);

}  // namespace cebound
