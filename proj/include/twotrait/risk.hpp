#pragma once

#include <array>
#include <cstdint>
#include <iterator>
#include <optional>
#include <string_view>

#include "twotrait/estimators.hpp"
#include "twotrait/rng.hpp"

namespace twotrait {

/// Number of count vectors in the sample space for n pools: C(n + 3, 3).
std::uint64_t sample_space_size(int n) noexcept;

/// All compositions of n into (x00, x10, x01, x11), in lexicographic order of
/// (x00, x10, x01) descending from (n, 0, 0, 0).
class SampleSpace {
 public:
  class iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = PoolCounts;
    using difference_type = std::ptrdiff_t;
    using pointer = const PoolCounts*;
    using reference = const PoolCounts&;

    iterator() = default;
    iterator(int n, bool end) : n_(n), end_(end), x_{n, 0, 0, 0} {}

    reference operator*() const { return x_; }
    pointer operator->() const { return &x_; }
    iterator& operator++();
    iterator operator++(int) {
      iterator old = *this;
      ++*this;
      return old;
    }
    friend bool operator==(const iterator& l, const iterator& r) {
      return l.end_ == r.end_ && (l.end_ || l.x_ == r.x_);
    }

   private:
    int n_ = 0;
    bool end_ = true;
    PoolCounts x_;
  };

  explicit SampleSpace(const PoolDesign& design);

  iterator begin() const { return {design_.n, false}; }
  iterator end() const { return {design_.n, true}; }
  std::uint64_t size() const noexcept { return sample_space_size(design_.n); }

 private:
  PoolDesign design_;
};

/// log P(x | p) under the pool-level multinomial; empty cells contribute 0
/// even when their probability is 0.
class PmfEvaluator {
 public:
  PmfEvaluator(const TraitPrevalence& p, const PoolDesign& design);
  PmfEvaluator(const TraitPrevalence& p, const DesignTables& tables);

  double log_weight(const PoolCounts& x) const;
  const std::array<double, 4>& log_theta() const noexcept { return log_theta_; }

 private:
  std::array<double, 4> log_theta_{};
  const DesignTables* tables_ = nullptr;
};

struct RiskOptions {
  EmConfig em{};
  std::uint64_t budget = 50'000'000;  // exact enumeration limit, outcomes
  int threads = 0;                    // 0: hardware concurrency
};

enum class RiskMethod { Exact, MonteCarlo };

std::string_view to_string(RiskMethod m) noexcept;

struct ComponentRisk {
  double truth = 0.0;
  double expectation = 0.0;
  double bias = 0.0;
  std::optional<double> relative_bias_percent;  // only when truth >= 1e-12
  double mse = 0.0;
  // Monte Carlo standard errors; zero for exact results.
  double expectation_se = 0.0;
  double mse_se = 0.0;
};

struct RiskSummary {
  TraitPrevalence truth;
  PoolDesign design;
  Estimator estimator = Estimator::Mle;
  std::array<ComponentRisk, 3> components{};  // (p10, p01, p11)
  double avg_abs_relative_bias = 0.0;
  double avg_mse = 0.0;
  double boundary_probability = 0.0;  // P(x outside the closed region)
  double total_mass = 0.0;            // enumerated pmf mass, 1 for Monte Carlo
  RiskMethod method = RiskMethod::Exact;
  std::uint64_t samples = 0;  // Monte Carlo only
  std::uint64_t seed = 0;     // Monte Carlo only
  double avg_abs_relative_bias_se = 0.0;
  double avg_mse_se = 0.0;
  double boundary_probability_se = 0.0;
  // Cov(p_hat), ordering (p10, p01, p11).
  std::array<std::array<double, 3>, 3> covariance{};
};

/// Exact P(x outside the closed region). Throws BudgetExceeded when the sample
/// space is larger than options.budget.
double boundary_probability(const TraitPrevalence& p, const PoolDesign& design,
                            const RiskOptions& options = {});

/// Exact finite-sample risk of an estimator by full enumeration.
RiskSummary exact_risk(const TraitPrevalence& p, const PoolDesign& design, Estimator estimator,
                       const RiskOptions& options = {});

/// Seeded Monte Carlo estimate of the same summary; identical output for a
/// fixed seed regardless of thread count.
RiskSummary monte_carlo_risk(const TraitPrevalence& p, const PoolDesign& design,
                             Estimator estimator, std::uint64_t samples, std::uint64_t seed,
                             const RiskOptions& options = {});

/// Draws one pool-count vector from the pool-level multinomial.
PoolCounts sample_counts(CounterRng& rng, const PoolDesign& design,
                         const PoolCellProbabilities& cells);

}  // namespace twotrait
