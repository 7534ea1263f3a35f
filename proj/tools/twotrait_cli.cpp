#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "output.hpp"
#include "twotrait/asymptotics.hpp"
#include "twotrait/estimators.hpp"
#include "twotrait/model.hpp"
#include "twotrait/risk.hpp"
#include "twotrait/rng.hpp"

#ifndef TWOTRAIT_VERSION
#define TWOTRAIT_VERSION "0.0.0"
#endif

namespace tt = twotrait;
using twotrait::cli::Json;
using twotrait::cli::Row;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalFlags {
  std::string format = "csv";
  int threads = 0;
  std::optional<int> precision;
};

struct Output {
  std::vector<Row> rows;
  Json metadata = Json::object();
  int default_precision = 4;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) parts.push_back(item);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(what + ": '" + s + "' is not a number");
  }
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw UsageError(what + ": '" + s + "' is not an integer");
  }
}

std::vector<double> parse_doubles(const std::string& s, std::size_t count, const std::string& what) {
  const auto parts = split(s, ',');
  if (parts.size() != count) {
    throw UsageError(what + " expects " + std::to_string(count) + " comma-separated values, got '" +
                     s + "'");
  }
  std::vector<double> v;
  for (const auto& p : parts) v.push_back(parse_double(p, what));
  return v;
}

tt::TraitPrevalence parse_prevalence(const std::string& s) {
  const auto v = parse_doubles(s, 3, "--p");
  return {v[0], v[1], v[2]};
}

void require_interior(const tt::TraitPrevalence& p) {
  if (!p.in_interior()) {
    throw UsageError("--p must lie strictly inside the simplex (all four cells in (0, 1)), got " +
                     tt::to_string(p));
  }
}

tt::PoolDesign make_design(int n, int k) {
  if (k < 1) throw UsageError("--k must be at least 1, got " + std::to_string(k));
  if (n < 1) throw UsageError("--n must be at least 1, got " + std::to_string(n));
  return {k, n};
}

std::vector<tt::Estimator> parse_estimators(const std::string& name, bool allow_all) {
  if (allow_all && name == "all") return {tt::Estimator::Mle, tt::Estimator::Rmm, tt::Estimator::Burrows};
  if (name == "mle" || name == "rmm" || name == "burrows") return {tt::parse_estimator(name)};
  throw UsageError("unknown estimator '" + name + "'; valid: mle, rmm, burrows" +
                   (allow_all ? ", all" : ""));
}

int resolved_threads(const GlobalFlags& g) {
  if (g.threads > 0) return g.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

Json optional_value(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

// estimate ---------------------------------------------------------------------

struct EstimateFlags {
  int n = 0;
  int k = 0;
  std::string counts;
  std::string estimator = "mle";
  double epsilon = 1e-10;
  int max_iter = 100000;
  std::string start = "0.25,0.25";
  bool full_loglik = false;
};

Output run_estimate(const EstimateFlags& f) {
  const auto design = make_design(f.n, f.k);
  const auto parts = split(f.counts, ',');
  if (parts.size() != 4) {
    throw UsageError("--counts expects x00,x10,x01,x11, got '" + f.counts + "'");
  }
  tt::PoolCounts x{parse_int(parts[0], "--counts"), parse_int(parts[1], "--counts"),
                   parse_int(parts[2], "--counts"), parse_int(parts[3], "--counts")};
  if (x.x00 < 0 || x.x10 < 0 || x.x01 < 0 || x.x11 < 0) {
    throw UsageError("--counts must be non-negative, got " + tt::to_string(x));
  }
  if (x.total() != f.n) {
    throw UsageError("--counts sum to " + std::to_string(x.total()) + " but --n is " +
                     std::to_string(f.n) + " (difference " + std::to_string(x.total() - f.n) + ")");
  }
  const auto start = parse_doubles(f.start, 2, "--start");
  tt::EmConfig config;
  config.epsilon = f.epsilon;
  config.max_iterations = f.max_iter;
  config.initial_pstar = {start[0], start[1]};
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  const bool in_region = tt::in_closure_region(x, design);
  const double msum = tt::membership_sum(x, design);
  Output out;
  for (const auto est : parse_estimators(f.estimator, true)) {
    tt::TraitPrevalence p;
    std::string path;
    int iterations = 0;
    if (est == tt::Estimator::Mle) {
      const auto r = tt::mle(x, design, config);
      p = r.estimate;
      path = std::string(tt::to_string(r.path));
      iterations = r.iterations;
    } else {
      p = tt::estimate(est, x, design);
      path = in_region ? (est == tt::Estimator::Rmm ? "closed_form" : "shrinkage") : "truncated";
    }
    Row row;
    row["estimator"] = std::string(tt::to_string(est));
    row["p10"] = p.p10;
    row["p01"] = p.p01;
    row["p11"] = p.p11;
    row["p00"] = p.p00();
    row["path"] = path;
    row["iterations"] = iterations;
    row["kernel"] = tt::log_likelihood(p, x, design, false);
    row["full_loglik"] = f.full_loglik ? Json(tt::log_likelihood(p, x, design, true)) : Json(nullptr);
    row["in_region"] = in_region;
    row["membership_sum"] = msum;
    out.rows.push_back(std::move(row));
  }
  out.metadata["method"] = "estimate";
  return out;
}

// risk -------------------------------------------------------------------------

struct RiskFlags {
  std::string p;
  int n = 0;
  int k = 0;
  std::string estimator = "mle";
  std::string method = "auto";
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  std::uint64_t budget = 50'000'000;
};

Row risk_row(const tt::RiskSummary& s) {
  static constexpr const char* kNames[3] = {"p10", "p01", "p11"};
  Row row;
  row["estimator"] = std::string(tt::to_string(s.estimator));
  row["method"] = std::string(tt::to_string(s.method));
  row["n"] = s.design.n;
  row["k"] = s.design.k;
  row["p10"] = s.truth.p10;
  row["p01"] = s.truth.p01;
  row["p11"] = s.truth.p11;
  for (int i = 0; i < 3; ++i) {
    const auto& c = s.components[static_cast<std::size_t>(i)];
    const std::string name = kNames[i];
    row["mean_" + name] = c.expectation;
    row["bias_" + name] = c.bias;
    row["rel_bias_pct_" + name] = optional_value(c.relative_bias_percent);
    row["mse_" + name] = c.mse;
  }
  row["avg_abs_rel_bias"] = s.avg_abs_relative_bias;
  row["avg_mse"] = s.avg_mse;
  row["avg_mse_x1000"] = 1000.0 * s.avg_mse;
  row["boundary_probability"] = s.boundary_probability;
  row["total_mass"] = s.total_mass;
  row["samples"] = s.samples;
  row["seed"] = s.method == tt::RiskMethod::MonteCarlo ? Json(s.seed) : Json(nullptr);
  row["avg_abs_rel_bias_se"] = s.avg_abs_relative_bias_se;
  row["avg_mse_se"] = s.avg_mse_se;
  row["boundary_probability_se"] = s.boundary_probability_se;
  return row;
}

// Exact when the sample space fits the budget, else Monte Carlo with a warning.
tt::RiskSummary evaluate_risk(const tt::TraitPrevalence& p, const tt::PoolDesign& design,
                              tt::Estimator est, const std::string& method,
                              std::uint64_t samples, std::uint64_t seed,
                              const tt::RiskOptions& options) {
  const std::uint64_t size = tt::sample_space_size(design.n);
  if (method == "exact") return tt::exact_risk(p, design, est, options);
  if (method == "mc") return tt::monte_carlo_risk(p, design, est, samples, seed, options);
  if (size <= options.budget) return tt::exact_risk(p, design, est, options);
  std::cerr << "warning: n=" << design.n << " has " << size << " outcomes, over the budget of "
            << options.budget << "; using Monte Carlo with " << samples << " samples, seed "
            << seed << '\n';
  return tt::monte_carlo_risk(p, design, est, samples, seed, options);
}

void check_method(const std::string& method) {
  if (method != "exact" && method != "mc" && method != "auto") {
    throw UsageError("unknown method '" + method + "'; valid: exact, mc, auto");
  }
}

Output run_risk(const RiskFlags& f, const GlobalFlags& g) {
  const auto p = parse_prevalence(f.p);
  require_interior(p);
  const auto design = make_design(f.n, f.k);
  check_method(f.method);
  if (f.samples == 0) throw UsageError("--samples must be positive");
  tt::RiskOptions options;
  options.budget = f.budget;
  options.threads = g.threads;
  Output out;
  bool any_mc = false;
  for (const auto est : parse_estimators(f.estimator, true)) {
    const auto s = evaluate_risk(p, design, est, f.method, f.samples, f.seed, options);
    any_mc = any_mc || s.method == tt::RiskMethod::MonteCarlo;
    out.rows.push_back(risk_row(s));
  }
  out.metadata["method"] = any_mc ? "monte_carlo" : "exact";
  if (any_mc) {
    out.metadata["seed"] = f.seed;
    out.metadata["samples"] = f.samples;
    out.metadata["rng"] = std::string(tt::CounterRng::kAlgorithm);
  }
  out.metadata["budget"] = f.budget;
  return out;
}

// cov --------------------------------------------------------------------------

struct CovFlags {
  std::string p;
  int k = 0;
  std::optional<int> n;
};

Output run_cov(const CovFlags& f) {
  const auto p = parse_prevalence(f.p);
  require_interior(p);
  if (f.k < 1) throw UsageError("--k must be at least 1");
  if (f.n && *f.n < 1) throw UsageError("--n must be at least 1");
  const auto cov = tt::covariance_matrix(p, f.k);
  static constexpr const char* kNames[3] = {"10", "01", "11"};
  Row row;
  row["k"] = f.k;
  row["n"] = f.n ? Json(*f.n) : Json(nullptr);
  row["p10"] = p.p10;
  row["p01"] = p.p01;
  row["p11"] = p.p11;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      row[std::string("sigma_") + kNames[i] + "_" + kNames[j]] = cov.sigma(i, j);
    }
  }
  row["min_eigenvalue"] = cov.min_eigenvalue();
  const std::optional<Eigen::Matrix3d> scaled =
      f.n ? std::optional<Eigen::Matrix3d>(cov.scaled(*f.n)) : std::nullopt;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      row[std::string("cov_") + kNames[i] + "_" + kNames[j]] =
          scaled ? Json((*scaled)(i, j)) : Json(nullptr);
    }
  }
  Output out;
  out.rows.push_back(std::move(row));
  out.metadata["method"] = "asymptotic_covariance";
  return out;
}

// bias -------------------------------------------------------------------------

struct BiasFlags {
  std::string p;
  int k = 0;
  std::string estimator = "all";
  std::optional<int> n;
};

Output run_bias(const BiasFlags& f) {
  const auto p = parse_prevalence(f.p);
  require_interior(p);
  if (f.k < 1) throw UsageError("--k must be at least 1");
  if (f.n && *f.n < 1) throw UsageError("--n must be at least 1");
  Output out;
  const std::array<double, 3> truth = p.as_array();
  for (const auto est : parse_estimators(f.estimator, true)) {
    const auto family = est == tt::Estimator::Burrows ? tt::BiasFamily::Burrows : tt::BiasFamily::MleRmm;
    const auto b = tt::first_order_bias(p, f.k, family);
    const std::array<double, 3> coef{b.bias10, b.bias01, b.bias11};
    static constexpr const char* kNames[3] = {"p10", "p01", "p11"};
    Row row;
    row["estimator"] = std::string(tt::to_string(est));
    row["k"] = f.k;
    row["n"] = f.n ? Json(*f.n) : Json(nullptr);
    row["p10"] = p.p10;
    row["p01"] = p.p01;
    row["p11"] = p.p11;
    for (int i = 0; i < 3; ++i) row[std::string("coef_") + kNames[i]] = coef[static_cast<std::size_t>(i)];
    for (int i = 0; i < 3; ++i) {
      const auto u = static_cast<std::size_t>(i);
      row[std::string("bias_") + kNames[i]] = f.n ? Json(coef[u] / *f.n) : Json(nullptr);
    }
    for (int i = 0; i < 3; ++i) {
      const auto u = static_cast<std::size_t>(i);
      row[std::string("rel_bias_pct_") + kNames[i]] =
          f.n ? Json(100.0 * coef[u] / (*f.n * truth[u])) : Json(nullptr);
    }
    out.rows.push_back(std::move(row));
  }
  out.metadata["method"] = "first_order_bias";
  return out;
}

// reproduce --------------------------------------------------------------------

struct ReproduceFlags {
  std::string target;
  std::string out = ".";
  std::uint64_t budget = 50'000'000;
  std::uint64_t seed = 1;
  std::uint64_t samples = 1'000'000;
};

const std::vector<std::string> kTargets = {"table1", "table2", "table3", "table4", "table5",
                                           "table6", "table7", "table8", "figures"};

const std::vector<tt::TraitPrevalence> kTable1Points = {
    {0.045, 0.045, 0.005}, {0.095, 0.045, 0.005}, {0.1, 0.1, 0.1}, {0.25, 0.05, 0.15}};
const std::vector<int> kTable1K = {2, 5, 10, 25};
const std::vector<int> kTable1N = {5, 10, 15, 25, 50, 100, 500, 1000};

const std::vector<tt::TraitPrevalence> kAveragePoints = {{0.067, 0.028, 0.019},
                                                         {0.144, 0.158, 0.178}};
const std::vector<int> kAverageN = {25, 50, 100, 250};
const std::vector<int> kAverageK = {1, 2, 5, 10, 15, 20, 25};

const std::vector<tt::TraitPrevalence> kComponentPoints = {
    {0.001, 0.001, 0.0001}, {0.045, 0.045, 0.005}, {0.095, 0.045, 0.005},
    {0.1, 0.1, 0.1},        {0.15, 0.1, 0.2},      {0.25, 0.05, 0.15}};
const std::vector<int> kComponentN = {10, 25, 50, 100};

const std::vector<tt::Estimator> kAllEstimators = {tt::Estimator::Mle, tt::Estimator::Rmm,
                                                   tt::Estimator::Burrows};

const std::array<std::array<double, 3>, 10> kTable2Starts = {{{0.176, 0.270, 0.429},
                                                              {0.332, 0.349, 0.244},
                                                              {0.058, 0.192, 0.164},
                                                              {0.164, 0.329, 0.213},
                                                              {0.346, 0.133, 0.271},
                                                              {0.110, 0.339, 0.065},
                                                              {0.368, 0.013, 0.364},
                                                              {0.149, 0.210, 0.262},
                                                              {0.086, 0.380, 0.307},
                                                              {0.053, 0.355, 0.202}}};

void put_point(Row& row, const tt::TraitPrevalence& p) {
  row["p10"] = p.p10;
  row["p01"] = p.p01;
  row["p11"] = p.p11;
}

struct ReproduceContext {
  const ReproduceFlags& flags;
  tt::RiskOptions options;
  bool any_mc = false;

  tt::RiskSummary risk(const tt::TraitPrevalence& p, int n, int k, tt::Estimator est) {
    auto s = evaluate_risk(p, {k, n}, est, "auto", flags.samples, flags.seed, options);
    any_mc = any_mc || s.method == tt::RiskMethod::MonteCarlo;
    return s;
  }
};

std::vector<Row> reproduce_table1(ReproduceContext& ctx) {
  std::vector<Row> rows;
  for (const int k : kTable1K) {
    for (const int n : kTable1N) {
      for (const auto& p : kTable1Points) {
        Row row;
        row["k"] = k;
        row["n"] = n;
        put_point(row, p);
        const tt::PoolDesign design{k, n};
        if (tt::sample_space_size(n) <= ctx.options.budget) {
          row["boundary_probability"] = tt::boundary_probability(p, design, ctx.options);
          row["method"] = "exact";
          row["se"] = 0.0;
        } else {
          // the estimator is irrelevant here; RMM is the cheapest
          const auto s = ctx.risk(p, n, k, tt::Estimator::Rmm);
          row["boundary_probability"] = s.boundary_probability;
          row["method"] = std::string(tt::to_string(s.method));
          row["se"] = s.boundary_probability_se;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<Row> reproduce_table2() {
  const tt::PoolDesign design{10, 35};
  const tt::PoolCounts x{3, 25, 5, 2};
  std::vector<Row> rows;
  for (std::size_t i = 0; i < kTable2Starts.size(); ++i) {
    const auto& s = kTable2Starts[i];
    const tt::TraitPrevalence start{s[0], s[1], s[2]};
    tt::EmConfig config;
    config.initial_pstar = {s[0], s[1]};
    const auto em = tt::mle(x, design, config);
    const auto nm = tt::nelder_mead_reference(x, design, start);
    auto make = [&](const std::string& method, const tt::TraitPrevalence& p, int iterations) {
      Row row;
      row["start"] = static_cast<int>(i + 1);
      row["start_p10"] = start.p10;
      row["start_p01"] = start.p01;
      row["start_p11"] = start.p11;
      row["method"] = method;
      put_point(row, p);
      row["full_loglik"] = tt::log_likelihood(p, x, design, true);
      row["iterations"] = iterations;
      return row;
    };
    rows.push_back(make("em", em.estimate, em.iterations));
    rows.push_back(make("simplex", nm.estimate, nm.iterations));
  }
  return rows;
}

std::vector<Row> reproduce_average(ReproduceContext& ctx, const tt::TraitPrevalence& p) {
  std::vector<Row> rows;
  for (const int n : kAverageN) {
    for (const auto est : kAllEstimators) {
      for (const int k : kAverageK) {
        const auto s = ctx.risk(p, n, k, est);
        Row row;
        put_point(row, p);
        row["n"] = n;
        row["k"] = k;
        row["estimator"] = std::string(tt::to_string(est));
        row["avg_abs_rel_bias"] = s.avg_abs_relative_bias;
        row["avg_mse_x1000"] = 1000.0 * s.avg_mse;
        row["method"] = std::string(tt::to_string(s.method));
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// Tables 5-6 are relative bias in percent, 7-8 are 1000 x MSE.
std::vector<Row> reproduce_components(ReproduceContext& ctx, int table) {
  const int k = (table == 5 || table == 7) ? 2 : 10;
  const bool bias = table <= 6;
  std::vector<Row> rows;
  for (const int n : kComponentN) {
    for (const auto est : kAllEstimators) {
      for (const auto& p : kComponentPoints) {
        const auto s = ctx.risk(p, n, k, est);
        Row row;
        row["k"] = k;
        row["n"] = n;
        row["estimator"] = std::string(tt::to_string(est));
        put_point(row, p);
        static constexpr const char* kNames[3] = {"p10", "p01", "p11"};
        for (std::size_t i = 0; i < 3; ++i) {
          const auto& c = s.components[i];
          row[std::string(bias ? "rel_bias_pct_" : "mse_x1000_") + kNames[i]] =
              bias ? optional_value(c.relative_bias_percent) : Json(1000.0 * c.mse);
        }
        row["method"] = std::string(tt::to_string(s.method));
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<Row> reproduce_figures(ReproduceContext& ctx) {
  static constexpr const char* kNames[3] = {"p10", "p01", "p11"};
  std::vector<Row> rows;
  for (std::size_t pi = 0; pi < kAveragePoints.size(); ++pi) {
    const auto& p = kAveragePoints[pi];
    for (const int n : kAverageN) {
      for (const int k : kAverageK) {
        for (const auto est : kAllEstimators) {
          const auto s = ctx.risk(p, n, k, est);
          for (std::size_t i = 0; i < 3; ++i) {
            const auto& c = s.components[i];
            for (const char* metric : {"rel_bias_pct", "mse"}) {
              Row row;
              row["point"] = static_cast<int>(pi + 1);
              put_point(row, p);
              row["n"] = n;
              row["k"] = k;
              row["estimator"] = std::string(tt::to_string(est));
              row["component"] = kNames[i];
              row["metric"] = metric;
              row["value"] = std::string(metric) == "mse" ? Json(c.mse)
                                                          : optional_value(c.relative_bias_percent);
              rows.push_back(std::move(row));
            }
          }
        }
      }
    }
  }
  return rows;
}

// ------------------------------------------------------------------------------

Json base_metadata(const std::string& command, const std::vector<std::string>& args,
                   const GlobalFlags& g) {
  Json m;
  m["version"] = TWOTRAIT_VERSION;
  m["command"] = command;
  m["args"] = args;
  m["threads"] = resolved_threads(g);
  return m;
}

void emit(std::ostream& os, const Output& out, const GlobalFlags& g) {
  if (g.format == "json") {
    twotrait::cli::write_json(os, out.metadata, out.rows);
  } else {
    twotrait::cli::write_csv(os, out.rows, g.precision.value_or(out.default_precision));
  }
}

void run_reproduce(const ReproduceFlags& f, const GlobalFlags& g, Json metadata) {
  bool known = false;
  for (const auto& t : kTargets) known = known || t == f.target;
  if (!known) {
    std::string list;
    for (const auto& t : kTargets) list += (list.empty() ? "" : ", ") + t;
    throw UsageError("unknown target '" + f.target + "'; valid targets: " + list);
  }
  if (f.samples == 0) throw UsageError("--samples must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  ReproduceContext ctx{f, {}, false};
  ctx.options.budget = f.budget;
  ctx.options.threads = g.threads;

  Output out;
  out.default_precision = f.target == "table1" ? 4 : 3;
  if (f.target == "table1") {
    out.rows = reproduce_table1(ctx);
  } else if (f.target == "table2") {
    out.rows = reproduce_table2();
  } else if (f.target == "table3") {
    out.rows = reproduce_average(ctx, kAveragePoints[0]);
  } else if (f.target == "table4") {
    out.rows = reproduce_average(ctx, kAveragePoints[1]);
  } else if (f.target == "figures") {
    out.rows = reproduce_figures(ctx);
    // raw MSE values are tiny; keep more digits unless overridden
    out.default_precision = 6;
  } else {
    out.rows = reproduce_components(ctx, f.target.back() - '0');
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  metadata["target"] = f.target;
  metadata["method"] = ctx.any_mc ? "exact+monte_carlo" : "exact";
  metadata["budget"] = f.budget;
  metadata["seed"] = f.seed;
  metadata["samples"] = f.samples;
  metadata["rng"] = std::string(tt::CounterRng::kAlgorithm);
  metadata["rows"] = out.rows.size();
  metadata["elapsed_seconds"] = elapsed;
  out.metadata = metadata;

  namespace fs = std::filesystem;
  fs::create_directories(f.out);
  const fs::path data = fs::path(f.out) / (f.target + (g.format == "json" ? ".json" : ".csv"));
  {
    std::ofstream os(data, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + data.string());
    emit(os, out, g);
  }
  const fs::path prov = fs::path(f.out) / (f.target + ".provenance.json");
  {
    std::ofstream os(prov, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + prov.string());
    Json doc = metadata;
    doc["output"] = data.filename().string();
    doc["format"] = g.format;
    doc["precision"] = g.precision.value_or(out.default_precision);
    twotrait::cli::write_json_value(os, doc);
  }
  std::cerr << "wrote " << data.string() << " (" << out.rows.size() << " rows) and "
            << prov.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-trait group testing: estimation, asymptotics and exact risk"};
  app.set_version_flag("--version", std::string(TWOTRAIT_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  int precision = -1;
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for risk sweeps (0: all cores)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--precision", precision,
                 "Decimals in CSV output (default 4; reproduce: 4 for table1, 3 otherwise)")
      ->check(CLI::Range(0, 17));

  EstimateFlags ef;
  auto* est = app.add_subcommand("estimate", "Estimate p from one set of pool counts");
  est->add_option("--n", ef.n, "Number of pools")->required();
  est->add_option("--k", ef.k, "Units per pool")->required();
  est->add_option("--counts", ef.counts, "Pool counts x00,x10,x01,x11")->required();
  est->add_option("--estimator", ef.estimator, "mle, rmm, burrows or all")->capture_default_str();
  est->add_option("--epsilon", ef.epsilon, "EM stopping tolerance on the log-likelihood")
      ->capture_default_str();
  est->add_option("--max-iter", ef.max_iter, "EM iteration cap")->capture_default_str();
  est->add_option("--start", ef.start, "EM starting value p10,p01")->capture_default_str();
  est->add_flag("--full-loglik", ef.full_loglik, "Also report the log-likelihood with the multinomial coefficient");

  RiskFlags rf;
  auto* risk = app.add_subcommand("risk", "Finite-sample bias and MSE of an estimator");
  risk->add_option("--p", rf.p, "True prevalence p10,p01,p11")->required();
  risk->add_option("--n", rf.n, "Number of pools")->required();
  risk->add_option("--k", rf.k, "Units per pool")->required();
  risk->add_option("--estimator", rf.estimator, "mle, rmm, burrows or all")->capture_default_str();
  risk->add_option("--method", rf.method, "exact, mc or auto (exact within budget)")
      ->capture_default_str();
  risk->add_option("--samples", rf.samples, "Monte Carlo samples")->capture_default_str();
  risk->add_option("--seed", rf.seed, "Monte Carlo seed")->capture_default_str();
  risk->add_option("--budget", rf.budget, "Exact enumeration limit in outcomes")
      ->capture_default_str();

  CovFlags cf;
  auto* cov = app.add_subcommand("cov", "Large-sample covariance matrix");
  cov->add_option("--p", cf.p, "True prevalence p10,p01,p11")->required();
  cov->add_option("--k", cf.k, "Units per pool")->required();
  cov->add_option("--n", cf.n, "Number of pools; adds sigma/(n k^2)");

  BiasFlags bf;
  auto* bias = app.add_subcommand("bias", "First-order bias coefficients");
  bias->add_option("--p", bf.p, "True prevalence p10,p01,p11")->required();
  bias->add_option("--k", bf.k, "Units per pool")->required();
  bias->add_option("--estimator", bf.estimator, "mle, rmm, burrows or all")->capture_default_str();
  bias->add_option("--n", bf.n, "Number of pools; adds bias/n and relative bias");

  ReproduceFlags pf;
  auto* rep = app.add_subcommand("reproduce", "Regenerate a reference table as a file");
  rep->add_option("--target", pf.target,
                  "table1, table2, table3, table4, table5, table6, table7, table8 or figures")
      ->required();
  rep->add_option("--out", pf.out, "Output directory")->capture_default_str();
  rep->add_option("--budget", pf.budget, "Exact enumeration limit; larger cells use Monte Carlo")
      ->capture_default_str();
  rep->add_option("--seed", pf.seed, "Monte Carlo seed")->capture_default_str();
  rep->add_option("--samples", pf.samples, "Monte Carlo samples")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (precision >= 0) g.precision = precision;

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const auto t0 = std::chrono::steady_clock::now();
    Output out;
    std::string command;
    if (*est) {
      command = "estimate";
      out = run_estimate(ef);
    } else if (*risk) {
      command = "risk";
      out = run_risk(rf, g);
    } else if (*cov) {
      command = "cov";
      out = run_cov(cf);
    } else if (*bias) {
      command = "bias";
      out = run_bias(bf);
    } else {
      run_reproduce(pf, g, base_metadata("reproduce", args, g));
      return 0;
    }
    Json meta = base_metadata(command, args, g);
    meta.update(out.metadata);
    meta["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.metadata = meta;
    emit(std::cout, out, g);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const tt::DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const tt::ContractError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
