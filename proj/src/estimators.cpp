#include "twotrait/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "twotrait/detail/numeric.hpp"

namespace twotrait {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Denominators below this are treated as a vanished cell rather than divided by.
constexpr double kDenominatorFloor = 1e-300;

TraitPrevalence clamped(TraitPrevalence p) {
  p.p10 = detail::clamp_tiny_negative(p.p10);
  p.p01 = detail::clamp_tiny_negative(p.p01);
  p.p11 = detail::clamp_tiny_negative(p.p11);
  return p;
}

// Inverse map applied to the three cumulative k-th roots
//   a = ((x00+x10)/n)^(1/k), b = ((x00+x01)/n)^(1/k), c = (x00/n)^(1/k),
// with p11 truncated at zero. Shared by the closed-form MLE and RMM so the two
// agree bit-for-bit on the closed region.
TraitPrevalence plug_in_truncated(double a, double b, double c) {
  const double p11 = 1.0 - a - b + c;
  if (p11 >= 0.0) return clamped({a - c, b - c, p11});
  return clamped({1.0 - b, 1.0 - a, 0.0});
}

TraitPrevalence closed_form_from_roots(const PoolCounts& x, const DesignTables& t) {
  return plug_in_truncated(t.root(x.x00 + x.x10), t.root(x.x00 + x.x01), t.root(x.x00));
}

struct ReducedCells {
  double theta00, theta10, theta01, theta11;
  double lead10, lead01;  // (p00 + p10)^(k-1), (p00 + p01)^(k-1)
};

ReducedCells reduced_cells(const ReducedPrevalence& q, int k) {
  const double p00 = q.p00();
  const double lam10 = p00 + q.p10;
  const double lam01 = p00 + q.p01;
  const double lead10 = detail::ipow(lam10, k - 1);
  const double lead01 = detail::ipow(lam01, k - 1);
  const double c = detail::ipow(p00, k);
  const double a = lead10 * lam10;
  const double b = lead01 * lam01;
  return {c, a - c, b - c, 1.0 - a - b + c, lead10, lead01};
}

double reduced_kernel(const ReducedCells& cells, const PoolCounts& x) {
  const std::array<double, 4> theta{cells.theta00, cells.theta10, cells.theta01, cells.theta11};
  const auto counts = x.cells();
  double total = 0.0;
  for (std::size_t s = 0; s < 4; ++s) {
    if (counts[s] == 0) continue;
    if (!(theta[s] > 0.0)) return kNegInf;
    total += counts[s] * std::log(theta[s]);
  }
  return total;
}

double checked_ratio(double numerator_weight, double denominator, const char* cell) {
  if (!(denominator > kDenominatorFloor)) {
    throw DegenerateStateError(std::string("EM denominator theta") + cell +
                               " vanished while its count is positive");
  }
  return numerator_weight / denominator;
}

ReducedPrevalence em_update(const ReducedPrevalence& q, const ReducedCells& cells,
                            const PoolCounts& x, int n) {
  const double inv_n = 1.0 / n;
  double p10 = 0.0;
  double p01 = 0.0;
  if (x.x10 > 0) p10 += checked_ratio(cells.lead10 * q.p10, cells.theta10, "10") * x.x10 * inv_n;
  if (x.x01 > 0) p01 += checked_ratio(cells.lead01 * q.p01, cells.theta01, "01") * x.x01 * inv_n;
  if (x.x11 > 0) {
    p10 += checked_ratio((1.0 - cells.lead10) * q.p10, cells.theta11, "11") * x.x11 * inv_n;
    p01 += checked_ratio((1.0 - cells.lead01) * q.p01, cells.theta11, "11") * x.x11 * inv_n;
  }
  return {p10, p01};
}

EstimateResult run_boundary_em(const PoolCounts& x, const PoolDesign& design,
                               const EmConfig& config) {
  ReducedPrevalence current = config.initial_pstar;
  double previous = reduced_kernel(reduced_cells(current, design.k), x);
  for (int t = 1; t <= config.max_iterations; ++t) {
    const ReducedPrevalence next =
        em_update(current, reduced_cells(current, design.k), x, design.n);
    const double value = reduced_kernel(reduced_cells(next, design.k), x);
    current = next;
    if (std::abs(value - previous) < config.epsilon) {
      EstimateResult result;
      result.estimate = clamped(current.full());
      result.path = EstimatePath::EmBoundary;
      result.iterations = t;
      result.final_log_likelihood = value;
      result.on_boundary = true;
      return result;
    }
    previous = value;
  }
  throw ConvergenceError("EM did not converge within " + std::to_string(config.max_iterations) +
                             " iterations for x = " + to_string(x),
                         current, config.max_iterations);
}

void require_valid(const PoolCounts& x, const PoolDesign& design) {
  design.validate();
  x.validate(design);
}

}  // namespace

void EmConfig::validate() const {
  if (!(epsilon > 0.0)) throw ContractError("EM epsilon must be positive");
  if (max_iterations < 1) throw ContractError("EM max_iterations must be >= 1");
  if (!initial_pstar.in_interior()) {
    throw ContractError("EM initial value must lie strictly inside the reduced simplex");
  }
}

std::string_view to_string(EstimatePath path) noexcept {
  return path == EstimatePath::ClosedForm ? "closed_form" : "em_boundary";
}

std::string_view to_string(Estimator e) noexcept {
  switch (e) {
    case Estimator::Mle:
      return "mle";
    case Estimator::Rmm:
      return "rmm";
    case Estimator::Burrows:
      return "burrows";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "mle") return Estimator::Mle;
  if (name == "rmm") return Estimator::Rmm;
  if (name == "burrows") return Estimator::Burrows;
  throw ContractError("unknown estimator '" + std::string(name) +
                      "' (expected mle, rmm or burrows)");
}

TraitPrevalence mle_closed_form(const PoolCounts& x, const PoolDesign& design) {
  require_valid(x, design);
  if (!in_closure_region(x, design)) {
    throw ContractError("closed-form MLE requires x in the closed region; x = " + to_string(x));
  }
  const int n = design.n;
  const int k = design.k;
  return plug_in_truncated(detail::kth_root(x.x00 + x.x10, n, k),
                           detail::kth_root(x.x00 + x.x01, n, k), detail::kth_root(x.x00, n, k));
}

EmWeights em_weights(const ReducedPrevalence& pstar, int k) {
  if (!pstar.in_interior()) throw ContractError("EM state must be strictly interior");
  const ReducedCells cells = reduced_cells(pstar, k);
  const double p00 = pstar.p00();
  const double lead00 = detail::ipow(p00, k - 1);
  EmWeights w;
  auto& z = w.zeta;
  // Row r = unit status {00, 10, 01}; column s = pool status {00, 10, 01, 11}.
  z[0][0] = 1.0;  // p00^(k-1) p00 / p00^k
  z[0][1] = (cells.lead10 - lead00) * p00 / cells.theta10;
  z[0][2] = (cells.lead01 - lead00) * p00 / cells.theta01;
  z[0][3] = (1.0 - cells.lead10 - cells.lead01 + lead00) * p00 / cells.theta11;
  z[1][1] = cells.lead10 * pstar.p10 / cells.theta10;
  z[1][3] = (1.0 - cells.lead10) * pstar.p10 / cells.theta11;
  z[2][2] = cells.lead01 * pstar.p01 / cells.theta01;
  z[2][3] = (1.0 - cells.lead01) * pstar.p01 / cells.theta11;
  return w;
}

ReducedPrevalence em_step(const ReducedPrevalence& pstar, const PoolCounts& x,
                          const PoolDesign& design) {
  require_valid(x, design);
  if (!pstar.in_interior()) throw ContractError("EM state must be strictly interior");
  if (in_closure_region(x, design)) {
    throw ContractError("EM step applies only off the closed region; x = " + to_string(x));
  }
  return em_update(pstar, reduced_cells(pstar, design.k), x, design.n);
}

EstimateResult mle(const PoolCounts& x, const PoolDesign& design, const EmConfig& config) {
  require_valid(x, design);
  config.validate();
  if (in_closure_region(x, design)) {
    EstimateResult result;
    result.estimate = mle_closed_form(x, design);
    result.final_log_likelihood = log_likelihood(result.estimate, x, design);
    return result;
  }
  return run_boundary_em(x, design, config);
}

EstimateResult mle(const PoolCounts& x, const DesignTables& tables, const EmConfig& config) {
  if (tables.in_closure_region(x)) {
    EstimateResult result;
    result.estimate = closed_form_from_roots(x, tables);
    result.final_log_likelihood = log_likelihood(result.estimate, x, tables.design());
    return result;
  }
  return run_boundary_em(x, tables.design(), config);
}

TraitPrevalence rmm(const PoolCounts& x, const PoolDesign& design) {
  require_valid(x, design);
  const int n = design.n;
  const int k = design.k;
  return plug_in_truncated(detail::kth_root(x.x00 + x.x10, n, k),
                           detail::kth_root(x.x00 + x.x01, n, k), detail::kth_root(x.x00, n, k));
}

TraitPrevalence rmm(const PoolCounts& x, const DesignTables& tables) {
  return closed_form_from_roots(x, tables);
}

namespace {

// Membership is decided on the unshrunk roots. Inside, the shared plug-in only
// truncates when rounding pushes p11 below zero, so eta = 0 reproduces RMM.
TraitPrevalence burrows_from_roots(double a, double b, double c, bool in_region) {
  if (in_region) return plug_in_truncated(a, b, c);
  return clamped({1.0 - b, 1.0 - a, 0.0});
}

}  // namespace

TraitPrevalence burrows(const PoolCounts& x, const PoolDesign& design) {
  require_valid(x, design);
  const double eta = (design.k - 1) / (2.0 * design.k);
  const double inv_k = 1.0 / design.k;
  auto shrunk = [&](int j) { return std::pow((j + eta) / (design.n + eta), inv_k); };
  return burrows_from_roots(shrunk(x.x00 + x.x10), shrunk(x.x00 + x.x01), shrunk(x.x00),
                            in_closure_region(x, design));
}

TraitPrevalence burrows(const PoolCounts& x, const DesignTables& tables) {
  return burrows_from_roots(tables.shrunk_root(x.x00 + x.x10), tables.shrunk_root(x.x00 + x.x01),
                            tables.shrunk_root(x.x00), tables.in_closure_region(x));
}

TraitPrevalence estimate(Estimator which, const PoolCounts& x, const PoolDesign& design,
                         const EmConfig& config) {
  switch (which) {
    case Estimator::Mle:
      return mle(x, design, config).estimate;
    case Estimator::Rmm:
      return rmm(x, design);
    case Estimator::Burrows:
      return burrows(x, design);
  }
  throw ContractError("unknown estimator");
}

NelderMeadResult nelder_mead_reference(const PoolCounts& x, const PoolDesign& design,
                                       const TraitPrevalence& start,
                                       const NelderMeadOptions& options) {
  require_valid(x, design);
  if (!start.in_interior()) throw ContractError("Nelder-Mead start must be interior");

  using Point = std::array<double, 3>;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Minimize the negated kernel; leaving the closed simplex costs +inf.
  auto objective = [&](const Point& q) {
    const TraitPrevalence p{q[0], q[1], q[2]};
    if (!p.in_closure()) return kInf;
    const double value = log_likelihood(p, x, design);
    return value == kNegInf ? kInf : -value;
  };

  std::array<Point, 4> simplex;
  simplex[0] = start.as_array();
  for (std::size_t i = 0; i < 3; ++i) {
    simplex[i + 1] = simplex[0];
    simplex[i + 1][i] += options.initial_step;
    if (!TraitPrevalence{simplex[i + 1][0], simplex[i + 1][1], simplex[i + 1][2]}.in_closure()) {
      simplex[i + 1][i] -= 2.0 * options.initial_step;
    }
  }
  std::array<double, 4> values{};
  for (std::size_t i = 0; i < 4; ++i) values[i] = objective(simplex[i]);

  auto combine = [](const Point& from, const Point& to, double t) {
    Point out{};
    for (std::size_t d = 0; d < 3; ++d) out[d] = from[d] + t * (to[d] - from[d]);
    return out;
  };

  NelderMeadResult result;
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  int iteration = 0;
  for (; iteration < options.max_iterations; ++iteration) {
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
    const double best = values[order[0]];
    const double worst = values[order[3]];
    if (std::isfinite(worst) &&
        worst - best <= options.tolerance * (std::abs(best) + options.tolerance)) {
      result.converged = true;
      break;
    }

    Point centroid{};
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t d = 0; d < 3; ++d) centroid[d] += simplex[order[i]][d] / 3.0;
    }
    const std::size_t hi = order[3];
    const Point reflected = combine(centroid, simplex[hi], -options.reflection);
    const double f_reflected = objective(reflected);

    if (f_reflected < best) {
      const Point expanded = combine(centroid, simplex[hi], -options.expansion);
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        simplex[hi] = expanded;
        values[hi] = f_expanded;
      } else {
        simplex[hi] = reflected;
        values[hi] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[order[2]]) {
      simplex[hi] = reflected;
      values[hi] = f_reflected;
      continue;
    }
    // Outside contraction when the reflection beat the worst vertex, inside otherwise.
    const bool outside = f_reflected < worst;
    const Point contracted = outside ? combine(centroid, reflected, options.contraction)
                                     : combine(centroid, simplex[hi], options.contraction);
    const double f_contracted = objective(contracted);
    if (f_contracted < std::min(f_reflected, worst)) {
      simplex[hi] = contracted;
      values[hi] = f_contracted;
      continue;
    }
    const Point& anchor = simplex[order[0]];
    for (std::size_t i = 1; i < 4; ++i) {
      simplex[order[i]] = combine(anchor, simplex[order[i]], options.shrink);
      values[order[i]] = objective(simplex[order[i]]);
    }
  }

  const auto best = static_cast<std::size_t>(
      std::distance(values.begin(), std::min_element(values.begin(), values.end())));
  result.estimate = clamped({simplex[best][0], simplex[best][1], simplex[best][2]});
  result.kernel = std::isfinite(values[best]) ? -values[best] : kNegInf;
  result.iterations = iteration;
  return result;
}

}  // namespace twotrait
