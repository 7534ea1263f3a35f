#pragma once

#include <array>
#include <vector>

#include "twotrait/types.hpp"

namespace twotrait {

/// Default mode rejects p outside the closed simplex; Unchecked evaluates the
/// algebraic map for any p whose cumulative sums are non-negative.
enum class Validation { Checked, Unchecked };

/// Pool-level cell probabilities, stored with theta00 explicit so that tiny
/// p00^k values survive (1 - sum would cancel them away).
struct PoolCellProbabilities {
  ThetaVector theta;
  double theta00 = 1.0;
};

/// Forward map p -> theta for pools of k units.
ThetaVector theta_from_p(const TraitPrevalence& p, int k, Validation mode = Validation::Checked);

/// Same map, keeping theta00 = p00^k at full relative precision.
PoolCellProbabilities pool_cells(const TraitPrevalence& p, int k,
                                 Validation mode = Validation::Checked);

/// log(theta00, theta10, theta01, theta11); -inf for empty cells.
std::array<double, 4> log_pool_cells(const TraitPrevalence& p, int k);

/// Inverse map h: theta -> p. The result may leave the simplex (negative p11);
/// admissibility is the caller's decision.
TraitPrevalence p_from_theta(const ThetaVector& theta, int k);
TraitPrevalence p_from_theta(const PoolCellProbabilities& cells, int k);

/// ((x00+x10)/n)^(1/k) + ((x00+x01)/n)^(1/k) - (x00/n)^(1/k).
double membership_sum(const PoolCounts& x, const PoolDesign& design);

/// Absolute slack allowed above 1 before a count vector leaves the closed region.
inline constexpr double kMembershipTolerance = 1e-12;

/// x lies in the closed region where the plug-in inverse h(x/n) is admissible.
bool in_closure_region(const PoolCounts& x, const PoolDesign& design);

/// log n! / (x00! x10! x01! x11!).
double log_multinomial_coefficient(const PoolCounts& x);

/// Multinomial log-likelihood kernel sum_s x_s log theta_s(p) with 0 log 0 = 0;
/// adds the log multinomial coefficient when requested.
double log_likelihood(const TraitPrevalence& p, const PoolCounts& x, const PoolDesign& design,
                      bool include_coefficient = false);

/// Kernel of the two-parameter model with p11 = 0.
double reduced_log_likelihood(const ReducedPrevalence& pstar, const PoolCounts& x,
                              const PoolDesign& design);

/// Per-design lookup tables for tight loops over many count vectors:
/// k-th roots of j/n, their shrunk counterparts ((j + eta)/(n + eta))^(1/k)
/// with eta = (k - 1)/(2k), and log j!.
class DesignTables {
 public:
  explicit DesignTables(const PoolDesign& design);

  const PoolDesign& design() const noexcept { return design_; }
  double eta() const noexcept { return eta_; }
  double root(int j) const { return root_[static_cast<std::size_t>(j)]; }
  double shrunk_root(int j) const { return shrunk_[static_cast<std::size_t>(j)]; }
  double log_factorial(int j) const { return log_fact_[static_cast<std::size_t>(j)]; }

  double membership_sum(const PoolCounts& x) const {
    return root(x.x00 + x.x10) + root(x.x00 + x.x01) - root(x.x00);
  }
  bool in_closure_region(const PoolCounts& x) const {
    return membership_sum(x) <= 1.0 + kMembershipTolerance;
  }
  double log_multinomial_coefficient(const PoolCounts& x) const {
    return log_fact_.back() - log_factorial(x.x00) - log_factorial(x.x10) -
           log_factorial(x.x01) - log_factorial(x.x11);
  }

 private:
  PoolDesign design_;
  double eta_;
  std::vector<double> root_;
  std::vector<double> shrunk_;
  std::vector<double> log_fact_;
};

}  // namespace twotrait
