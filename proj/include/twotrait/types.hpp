#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace twotrait {

// Errors ---------------------------------------------------------------------

/// A probability vector or design is outside the admissible set.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An operation was called with its precondition violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// EM reached a state where a required cell probability vanished.
class DegenerateStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact enumeration would exceed the configured outcome budget.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, std::uint64_t outcomes, std::uint64_t budget)
      : std::runtime_error(what), outcomes_(outcomes), budget_(budget) {}
  std::uint64_t outcomes() const noexcept { return outcomes_; }
  std::uint64_t budget() const noexcept { return budget_; }

 private:
  std::uint64_t outcomes_;
  std::uint64_t budget_;
};

// Domain types ---------------------------------------------------------------

/// Joint prevalence of the two traits, p = (p10, p01, p11); p00 is derived.
struct TraitPrevalence {
  double p10 = 0.0;
  double p01 = 0.0;
  double p11 = 0.0;

  constexpr double p00() const noexcept { return 1.0 - p10 - p01 - p11; }

  /// All four cells in [0, 1]: the closed simplex.
  bool in_closure() const noexcept;
  /// All four cells in (0, 1).
  bool in_interior() const noexcept;

  std::array<double, 3> as_array() const noexcept { return {p10, p01, p11}; }
  friend bool operator==(const TraitPrevalence&, const TraitPrevalence&) = default;
};

/// Pool-level multinomial parameter theta = (theta10, theta01, theta11).
struct ThetaVector {
  double theta10 = 0.0;
  double theta01 = 0.0;
  double theta11 = 0.0;

  constexpr double theta00() const noexcept { return 1.0 - theta10 - theta01 - theta11; }
};

/// Parameters of the reduced model with p11 fixed at zero.
struct ReducedPrevalence {
  double p10 = 0.0;
  double p01 = 0.0;

  constexpr double p00() const noexcept { return 1.0 - p10 - p01; }
  bool in_interior() const noexcept { return p10 > 0.0 && p01 > 0.0 && p10 + p01 < 1.0; }
  constexpr TraitPrevalence full() const noexcept { return {p10, p01, 0.0}; }
};

/// k units per pool, n pools.
struct PoolDesign {
  int k = 1;
  int n = 1;

  void validate() const;
};

/// Observed pool outcome counts; x00 + x10 + x01 + x11 = n.
struct PoolCounts {
  int x00 = 0;
  int x10 = 0;
  int x01 = 0;
  int x11 = 0;

  constexpr int total() const noexcept { return x00 + x10 + x01 + x11; }
  constexpr std::array<int, 4> cells() const noexcept { return {x00, x10, x01, x11}; }

  /// Throws ContractError on negative cells or a total different from design.n.
  void validate(const PoolDesign& design) const;
  friend bool operator==(const PoolCounts&, const PoolCounts&) = default;
};

std::string to_string(const TraitPrevalence& p);
std::string to_string(const PoolCounts& x);

}  // namespace twotrait
