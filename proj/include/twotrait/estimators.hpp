#pragma once

#include <string_view>

#include "twotrait/model.hpp"

namespace twotrait {

/// Stopping rule for the boundary EM: |l*(t+1) - l*(t)| < epsilon on the kernel.
struct EmConfig {
  double epsilon = 1e-10;
  int max_iterations = 100000;
  ReducedPrevalence initial_pstar{0.25, 0.25};

  void validate() const;
};

enum class EstimatePath { ClosedForm, EmBoundary };

std::string_view to_string(EstimatePath path) noexcept;

struct EstimateResult {
  TraitPrevalence estimate;
  EstimatePath path = EstimatePath::ClosedForm;
  int iterations = 0;
  double final_log_likelihood = 0.0;  // kernel, no multinomial coefficient
  bool on_boundary = false;
};

/// EM hit max_iterations; carries the last iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, ReducedPrevalence last, int iterations)
      : std::runtime_error(what), last_(last), iterations_(iterations) {}
  ReducedPrevalence last_iterate() const noexcept { return last_; }
  int iterations() const noexcept { return iterations_; }

 private:
  ReducedPrevalence last_;
  int iterations_;
};

enum class Estimator { Mle, Rmm, Burrows };

std::string_view to_string(Estimator e) noexcept;
/// Parses "mle", "rmm" or "burrows"; throws ContractError otherwise.
Estimator parse_estimator(std::string_view name);

/// h(x/n) for x in the closed region.
TraitPrevalence mle_closed_form(const PoolCounts& x, const PoolDesign& design);

/// Conditional expectations zeta[r][s] = E(unit status r | pool status s) of
/// the E-step, r in {00, 10, 01}, s in {00, 10, 01, 11}.
struct EmWeights {
  std::array<std::array<double, 4>, 3> zeta{};
};

EmWeights em_weights(const ReducedPrevalence& pstar, int k);

/// One EM update of the reduced model.
ReducedPrevalence em_step(const ReducedPrevalence& pstar, const PoolCounts& x,
                          const PoolDesign& design);

/// Global maximizer of the likelihood over the closed simplex: closed form on
/// the closed region, boundary EM with p11 = 0 elsewhere.
EstimateResult mle(const PoolCounts& x, const PoolDesign& design, const EmConfig& config = {});

/// Restricted method of moments: plug-in inverse with p11 truncated at 0.
TraitPrevalence rmm(const PoolCounts& x, const PoolDesign& design);

/// Burrows-type shrinkage estimator, eta = (k - 1)/(2k).
TraitPrevalence burrows(const PoolCounts& x, const PoolDesign& design);

/// Evaluates one estimator; for Mle only the estimate is returned.
TraitPrevalence estimate(Estimator which, const PoolCounts& x, const PoolDesign& design,
                         const EmConfig& config = {});

/// Table-driven variants for loops over a whole sample space. They produce
/// bit-identical results to the direct functions above.
TraitPrevalence rmm(const PoolCounts& x, const DesignTables& tables);
TraitPrevalence burrows(const PoolCounts& x, const DesignTables& tables);
EstimateResult mle(const PoolCounts& x, const DesignTables& tables, const EmConfig& config);

struct NelderMeadOptions {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double initial_step = 0.05;
  int max_iterations = 5000;
  double tolerance = 1e-8;  // relative spread of simplex values
};

struct NelderMeadResult {
  TraitPrevalence estimate;
  double kernel = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free local maximizer of the kernel over the closed simplex.
/// Diagnostic only: it may stagnate away from the global maximum.
NelderMeadResult nelder_mead_reference(const PoolCounts& x, const PoolDesign& design,
                                       const TraitPrevalence& start,
                                       const NelderMeadOptions& options = {});

}  // namespace twotrait
