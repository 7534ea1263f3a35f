#include "twotrait/risk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "twotrait/summation.hpp"

namespace twotrait {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRelativeBiasFloor = 1e-12;
constexpr std::uint64_t kMonteCarloBlock = 4096;

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, chunks) on a pool of workers and returns the results
// in index order. Chunk boundaries do not depend on the thread count, so a
// merge over the returned vector is bit-stable.
template <typename Result, typename Fn>
std::vector<Result> run_chunks(std::size_t chunks, int threads, Fn fn) {
  std::vector<Result> results(chunks);
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(
      resolve_threads(threads), static_cast<int>(std::max<std::size_t>(chunks, 1)))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < chunks; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < chunks && !failed; i = next++) {
          try {
            results[i] = fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

void require_interior(const TraitPrevalence& p) {
  if (!p.in_interior()) {
    throw DomainError("risk evaluation needs p strictly inside the simplex, got " + to_string(p));
  }
}

void require_budget(const PoolDesign& design, std::uint64_t budget) {
  const std::uint64_t size = sample_space_size(design.n);
  if (size > budget) {
    throw BudgetExceeded("exact enumeration of " + std::to_string(size) +
                             " outcomes exceeds the budget of " + std::to_string(budget) +
                             "; use Monte Carlo instead",
                         size, budget);
  }
}

TraitPrevalence evaluate(Estimator which, const PoolCounts& x, const DesignTables& tables,
                         const EmConfig& em) {
  switch (which) {
    case Estimator::Mle:
      // Same estimate bit for bit, without the likelihood evaluation.
      if (tables.in_closure_region(x)) return rmm(x, tables);
      return mle(x, tables, em).estimate;
    case Estimator::Rmm:
      return rmm(x, tables);
    case Estimator::Burrows:
      return burrows(x, tables);
  }
  throw ContractError("unknown estimator");
}

// Calls fn(x, weight) for every outcome with x00 fixed, skipping zero-weight
// outcomes.
template <typename Fn>
void for_each_in_slice(int x00, const PoolDesign& design, const PmfEvaluator& pmf, Fn&& fn) {
  const int rest = design.n - x00;
  for (int x10 = 0; x10 <= rest; ++x10) {
    for (int x01 = 0; x01 <= rest - x10; ++x01) {
      const PoolCounts x{x00, x10, x01, rest - x10 - x01};
      const double log_w = pmf.log_weight(x);
      if (log_w == kNegInf) continue;
      const double w = std::exp(log_w);
      if (w == 0.0) continue;
      fn(x, w);
    }
  }
}

struct ExactPartial {
  CompensatedSum mass;
  CompensatedSum off_mass;
  std::array<CompensatedSum, 3> first;
  std::array<CompensatedSum, 3> squared_error;
  std::array<CompensatedSum, 3> cross_error;  // (10,01), (10,11), (01,11)

  void merge(const ExactPartial& o) {
    mass.merge(o.mass);
    off_mass.merge(o.off_mass);
    for (std::size_t i = 0; i < 3; ++i) {
      first[i].merge(o.first[i]);
      squared_error[i].merge(o.squared_error[i]);
      cross_error[i].merge(o.cross_error[i]);
    }
  }
};

void fill_relative_bias(RiskSummary& out) {
  double abs_rb = 0.0;
  double mse = 0.0;
  for (auto& c : out.components) {
    c.bias = c.expectation - c.truth;
    if (c.truth >= kRelativeBiasFloor) {
      c.relative_bias_percent = 100.0 * c.bias / c.truth;
      abs_rb += std::abs(*c.relative_bias_percent);
    }
    mse += c.mse;
  }
  out.avg_abs_relative_bias = abs_rb / 3.0;
  out.avg_mse = mse / 3.0;
}

}  // namespace

std::uint64_t sample_space_size(int n) noexcept {
  if (n < 0) return 0;
  const auto m = static_cast<std::uint64_t>(n);
  return (m + 3) * (m + 2) * (m + 1) / 6;
}

SampleSpace::SampleSpace(const PoolDesign& design) : design_(design) { design_.validate(); }

SampleSpace::iterator& SampleSpace::iterator::operator++() {
  if (end_) return *this;
  if (x_.x11 > 0) {
    ++x_.x01;
    --x_.x11;
  } else if (x_.x10 < n_ - x_.x00) {
    ++x_.x10;
    x_.x01 = 0;
    x_.x11 = n_ - x_.x00 - x_.x10;
  } else if (x_.x00 > 0) {
    --x_.x00;
    x_.x10 = 0;
    x_.x01 = 0;
    x_.x11 = n_ - x_.x00;
  } else {
    end_ = true;
  }
  return *this;
}

PmfEvaluator::PmfEvaluator(const TraitPrevalence& p, const PoolDesign& design) {
  design.validate();
  log_theta_ = log_pool_cells(p, design.k);
}

PmfEvaluator::PmfEvaluator(const TraitPrevalence& p, const DesignTables& tables)
    : PmfEvaluator(p, tables.design()) {
  tables_ = &tables;
}

double PmfEvaluator::log_weight(const PoolCounts& x) const {
  const auto counts = x.cells();
  double total = tables_ != nullptr ? tables_->log_multinomial_coefficient(x)
                                    : log_multinomial_coefficient(x);
  for (std::size_t s = 0; s < 4; ++s) {
    if (counts[s] == 0) continue;
    if (log_theta_[s] == kNegInf) return kNegInf;
    total += counts[s] * log_theta_[s];
  }
  return total;
}

std::string_view to_string(RiskMethod m) noexcept {
  return m == RiskMethod::Exact ? "exact" : "monte_carlo";
}

double boundary_probability(const TraitPrevalence& p, const PoolDesign& design,
                            const RiskOptions& options) {
  design.validate();
  require_interior(p);
  require_budget(design, options.budget);
  const DesignTables tables(design);
  const PmfEvaluator pmf(p, tables);
  struct Partial {
    CompensatedSum off;
  };
  const auto parts = run_chunks<Partial>(
      static_cast<std::size_t>(design.n) + 1, options.threads, [&](std::size_t chunk) {
        Partial part;
        for_each_in_slice(static_cast<int>(chunk), design, pmf, [&](const PoolCounts& x, double w) {
          if (!tables.in_closure_region(x)) part.off += w;
        });
        return part;
      });
  CompensatedSum off;
  for (const auto& part : parts) off.merge(part.off);
  return off.value();
}

RiskSummary exact_risk(const TraitPrevalence& p, const PoolDesign& design, Estimator estimator,
                       const RiskOptions& options) {
  design.validate();
  require_interior(p);
  options.em.validate();
  require_budget(design, options.budget);
  const DesignTables tables(design);
  const PmfEvaluator pmf(p, tables);
  const auto truth = p.as_array();

  const auto parts = run_chunks<ExactPartial>(
      static_cast<std::size_t>(design.n) + 1, options.threads, [&](std::size_t chunk) {
        ExactPartial part;
        for_each_in_slice(static_cast<int>(chunk), design, pmf, [&](const PoolCounts& x, double w) {
          part.mass += w;
          if (!tables.in_closure_region(x)) part.off_mass += w;
          const auto e = evaluate(estimator, x, tables, options.em).as_array();
          std::array<double, 3> d{};
          for (std::size_t i = 0; i < 3; ++i) {
            part.first[i] += w * e[i];
            d[i] = e[i] - truth[i];
            part.squared_error[i] += w * d[i] * d[i];
          }
          part.cross_error[0] += w * d[0] * d[1];
          part.cross_error[1] += w * d[0] * d[2];
          part.cross_error[2] += w * d[1] * d[2];
        });
        return part;
      });

  ExactPartial total;
  for (const auto& part : parts) total.merge(part);

  RiskSummary out;
  out.truth = p;
  out.design = design;
  out.estimator = estimator;
  out.method = RiskMethod::Exact;
  out.total_mass = total.mass.value();
  out.boundary_probability = total.off_mass.value();
  for (std::size_t i = 0; i < 3; ++i) {
    auto& c = out.components[i];
    c.truth = truth[i];
    c.expectation = total.first[i].value();
    c.mse = total.squared_error[i].value();
  }
  fill_relative_bias(out);
  // Centred at the truth, so Cov = E[d d'] - bias bias'.
  const std::array<double, 3> cross{total.cross_error[0].value(), total.cross_error[1].value(),
                                    total.cross_error[2].value()};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double m = i == j ? out.components[i].mse : cross[i + j - 1];
      out.covariance[i][j] = m - out.components[i].bias * out.components[j].bias;
    }
  }
  return out;
}

int sample_binomial(CounterRng& rng, int n, double prob) {
  if (n <= 0 || !(prob > 0.0)) return 0;
  if (prob >= 1.0) return n;
  if (prob > 0.5) return n - sample_binomial(rng, n, 1.0 - prob);
  const double log_q = std::log1p(-prob);
  if (n * log_q < -600.0) {
    const int half = n / 2;
    return sample_binomial(rng, half, prob) + sample_binomial(rng, n - half, prob);
  }
  const double odds = prob / (1.0 - prob);
  double f = std::exp(n * log_q);
  double u = rng.uniform();
  int k = 0;
  while (u > f && k < n) {
    u -= f;
    f *= odds * (n - k) / (k + 1.0);
    ++k;
  }
  return k;
}

PoolCounts sample_counts(CounterRng& rng, const PoolDesign& design,
                         const PoolCellProbabilities& cells) {
  const auto& t = cells.theta;
  PoolCounts x;
  x.x00 = sample_binomial(rng, design.n, cells.theta00);
  int rest = design.n - x.x00;
  const double positive = t.theta10 + t.theta01 + t.theta11;
  x.x10 = positive > 0.0 ? sample_binomial(rng, rest, t.theta10 / positive) : 0;
  rest -= x.x10;
  const double tail = t.theta01 + t.theta11;
  x.x01 = tail > 0.0 ? sample_binomial(rng, rest, t.theta01 / tail) : 0;
  x.x11 = rest - x.x01;
  return x;
}

namespace {

struct MonteCarloPartial {
  std::uint64_t count = 0;
  std::uint64_t off = 0;
  std::array<CompensatedSum, 3> first;
  std::array<CompensatedSum, 6> cross;  // e_i e_j for i <= j
  std::array<CompensatedSum, 3> squared_error;
  std::array<CompensatedSum, 3> squared_error_sq;
  CompensatedSum mean_sq;
  CompensatedSum mean_sq_sq;

  void merge(const MonteCarloPartial& o) {
    count += o.count;
    off += o.off;
    for (std::size_t i = 0; i < 3; ++i) {
      first[i].merge(o.first[i]);
      squared_error[i].merge(o.squared_error[i]);
      squared_error_sq[i].merge(o.squared_error_sq[i]);
    }
    for (std::size_t i = 0; i < 6; ++i) cross[i].merge(o.cross[i]);
    mean_sq.merge(o.mean_sq);
    mean_sq_sq.merge(o.mean_sq_sq);
  }
};

constexpr std::size_t cross_index(std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return i == 0 ? j : (i == 1 ? 2 + j : 5);
}

// Standard error of a sample mean from raw first and second moments.
double mean_se(double sum, double sum_sq, double n) {
  if (n < 2.0) return 0.0;
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq / n - mean * mean) * n / (n - 1.0));
  return std::sqrt(var / n);
}

}  // namespace

RiskSummary monte_carlo_risk(const TraitPrevalence& p, const PoolDesign& design,
                             Estimator estimator, std::uint64_t samples, std::uint64_t seed,
                             const RiskOptions& options) {
  design.validate();
  require_interior(p);
  options.em.validate();
  if (samples < 1) throw ContractError("Monte Carlo needs at least one sample");
  const DesignTables tables(design);
  const PoolCellProbabilities cells = pool_cells(p, design.k);
  const auto truth = p.as_array();

  const std::size_t blocks = (samples + kMonteCarloBlock - 1) / kMonteCarloBlock;
  const auto parts =
      run_chunks<MonteCarloPartial>(blocks, options.threads, [&](std::size_t block) {
        MonteCarloPartial part;
        const std::uint64_t begin = block * kMonteCarloBlock;
        const std::uint64_t end = std::min(samples, begin + kMonteCarloBlock);
        for (std::uint64_t s = begin; s < end; ++s) {
          CounterRng rng(seed, s);
          const PoolCounts x = sample_counts(rng, design, cells);
          ++part.count;
          if (!tables.in_closure_region(x)) ++part.off;
          const auto e = evaluate(estimator, x, tables, options.em).as_array();
          double mean_sq = 0.0;
          for (std::size_t i = 0; i < 3; ++i) {
            part.first[i] += e[i];
            for (std::size_t j = i; j < 3; ++j) part.cross[cross_index(i, j)] += e[i] * e[j];
            const double d = e[i] - truth[i];
            part.squared_error[i] += d * d;
            part.squared_error_sq[i] += d * d * d * d;
            mean_sq += d * d / 3.0;
          }
          part.mean_sq += mean_sq;
          part.mean_sq_sq += mean_sq * mean_sq;
        }
        return part;
      });

  MonteCarloPartial total;
  for (const auto& part : parts) total.merge(part);
  const auto n = static_cast<double>(total.count);

  RiskSummary out;
  out.truth = p;
  out.design = design;
  out.estimator = estimator;
  out.method = RiskMethod::MonteCarlo;
  out.samples = samples;
  out.seed = seed;
  out.total_mass = 1.0;
  const double q = static_cast<double>(total.off) / n;
  out.boundary_probability = q;
  out.boundary_probability_se = std::sqrt(q * (1.0 - q) / n);

  std::array<double, 3> mean{};
  for (std::size_t i = 0; i < 3; ++i) {
    auto& c = out.components[i];
    c.truth = truth[i];
    mean[i] = total.first[i].value() / n;
    c.expectation = mean[i];
    c.expectation_se =
        mean_se(total.first[i].value(), total.cross[cross_index(i, i)].value(), n);
    c.mse = total.squared_error[i].value() / n;
    c.mse_se = mean_se(total.squared_error[i].value(), total.squared_error_sq[i].value(), n);
  }
  fill_relative_bias(out);
  out.avg_mse_se = mean_se(total.mean_sq.value(), total.mean_sq_sq.value(), n);

  // Delta method on mean |100 (E_i - p_i) / p_i| / 3 with the sample covariance
  // of the estimator components.
  std::array<double, 3> grad{};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& c = out.components[i];
    if (!c.relative_bias_percent) continue;
    const double sign = *c.relative_bias_percent >= 0.0 ? 1.0 : -1.0;
    grad[i] = sign * 100.0 / (3.0 * c.truth);
  }
  double var = 0.0;
  if (n >= 2.0) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        const double cov = (total.cross[cross_index(i, j)].value() / n - mean[i] * mean[j]) *
                           n / (n - 1.0);
        out.covariance[i][j] = cov;
        var += grad[i] * grad[j] * cov / n;
      }
    }
  }
  out.avg_abs_relative_bias_se = std::sqrt(std::max(0.0, var));
  return out;
}

}  // namespace twotrait
