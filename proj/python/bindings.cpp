#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "twotrait/asymptotics.hpp"
#include "twotrait/estimators.hpp"
#include "twotrait/model.hpp"
#include "twotrait/risk.hpp"

namespace py = pybind11;
namespace tt = twotrait;

namespace {

using Triple = std::array<double, 3>;
using Counts = std::array<int, 4>;

tt::TraitPrevalence prevalence(const Triple& p) { return {p[0], p[1], p[2]}; }
Triple triple(const tt::TraitPrevalence& p) { return {p.p10, p.p01, p.p11}; }

tt::PoolCounts counts(const Counts& x) { return {x[0], x[1], x[2], x[3]}; }

tt::PoolDesign design_for(const Counts& x, int k) {
  tt::PoolDesign d{k, x[0] + x[1] + x[2] + x[3]};
  d.validate();
  return d;
}

tt::RiskOptions risk_options(std::uint64_t budget, int threads) {
  tt::RiskOptions o;
  o.budget = budget;
  o.threads = threads;
  return o;
}

py::dict summary_dict(const tt::RiskSummary& s) {
  py::dict d;
  d["estimator"] = std::string(tt::to_string(s.estimator));
  d["method"] = std::string(tt::to_string(s.method));
  d["n"] = s.design.n;
  d["k"] = s.design.k;
  d["truth"] = triple(s.truth);
  py::list comps;
  for (const auto& c : s.components) {
    py::dict cd;
    cd["truth"] = c.truth;
    cd["expectation"] = c.expectation;
    cd["bias"] = c.bias;
    cd["relative_bias_percent"] = c.relative_bias_percent;
    cd["mse"] = c.mse;
    cd["expectation_se"] = c.expectation_se;
    cd["mse_se"] = c.mse_se;
    comps.append(cd);
  }
  d["components"] = comps;
  d["avg_abs_relative_bias"] = s.avg_abs_relative_bias;
  d["avg_mse"] = s.avg_mse;
  d["boundary_probability"] = s.boundary_probability;
  d["total_mass"] = s.total_mass;
  d["samples"] = s.samples;
  d["seed"] = s.seed;
  d["covariance"] = s.covariance;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-trait group testing estimators and risk engine";
  m.attr("__version__") = TWOTRAIT_VERSION;

  py::register_exception<tt::DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<tt::ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<tt::BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);
  py::register_exception<tt::ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<tt::DegenerateStateError>(m, "DegenerateStateError", PyExc_RuntimeError);

  m.def(
      "theta_from_p",
      [](const Triple& p, int k, bool checked) {
        const auto t = tt::theta_from_p(prevalence(p), k,
                                        checked ? tt::Validation::Checked : tt::Validation::Unchecked);
        return Triple{t.theta10, t.theta01, t.theta11};
      },
      py::arg("p"), py::arg("k"), py::arg("checked") = true,
      "Pool-level cell probabilities (theta10, theta01, theta11).");
  m.def(
      "p_from_theta",
      [](const Triple& t, int k) { return triple(tt::p_from_theta(tt::ThetaVector{t[0], t[1], t[2]}, k)); },
      py::arg("theta"), py::arg("k"));
  m.def(
      "in_closure_region",
      [](const Counts& x, int k) { return tt::in_closure_region(counts(x), design_for(x, k)); },
      py::arg("counts"), py::arg("k"));
  m.def(
      "log_likelihood",
      [](const Triple& p, const Counts& x, int k, bool full) {
        return tt::log_likelihood(prevalence(p), counts(x), design_for(x, k), full);
      },
      py::arg("p"), py::arg("counts"), py::arg("k"), py::arg("full") = false);

  m.def(
      "mle",
      [](const Counts& x, int k, double epsilon, int max_iterations, std::array<double, 2> start) {
        tt::EmConfig c;
        c.epsilon = epsilon;
        c.max_iterations = max_iterations;
        c.initial_pstar = {start[0], start[1]};
        const auto r = tt::mle(counts(x), design_for(x, k), c);
        py::dict d;
        d["estimate"] = triple(r.estimate);
        d["path"] = std::string(tt::to_string(r.path));
        d["iterations"] = r.iterations;
        d["log_likelihood"] = r.final_log_likelihood;
        d["on_boundary"] = r.on_boundary;
        return d;
      },
      py::arg("counts"), py::arg("k"), py::arg("epsilon") = 1e-10,
      py::arg("max_iterations") = 100000, py::arg("start") = std::array<double, 2>{0.25, 0.25});
  m.def(
      "rmm", [](const Counts& x, int k) { return triple(tt::rmm(counts(x), design_for(x, k))); },
      py::arg("counts"), py::arg("k"));
  m.def(
      "burrows",
      [](const Counts& x, int k) { return triple(tt::burrows(counts(x), design_for(x, k))); },
      py::arg("counts"), py::arg("k"));

  m.def(
      "covariance",
      [](const Triple& p, int k) {
        const auto c = tt::covariance_matrix(prevalence(p), k);
        std::array<Triple, 3> out{};
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c.sigma(i, j);
        return out;
      },
      py::arg("p"), py::arg("k"), "Limit of n k^2 Cov(p_hat).");
  m.def(
      "first_order_bias",
      [](const Triple& p, int k, const std::string& estimator) {
        const auto family = tt::parse_estimator(estimator) == tt::Estimator::Burrows
                                ? tt::BiasFamily::Burrows
                                : tt::BiasFamily::MleRmm;
        const auto b = tt::first_order_bias(prevalence(p), k, family);
        return Triple{b.bias10, b.bias01, b.bias11};
      },
      py::arg("p"), py::arg("k"), py::arg("estimator") = "mle");

  m.def(
      "boundary_probability",
      [](const Triple& p, int n, int k, std::uint64_t budget, int threads) {
        py::gil_scoped_release release;
        return tt::boundary_probability(prevalence(p), {k, n}, risk_options(budget, threads));
      },
      py::arg("p"), py::arg("n"), py::arg("k"), py::arg("budget") = 50'000'000,
      py::arg("threads") = 0);
  m.def(
      "exact_risk",
      [](const Triple& p, int n, int k, const std::string& estimator, std::uint64_t budget,
         int threads) {
        tt::RiskSummary s;
        {
          py::gil_scoped_release release;
          s = tt::exact_risk(prevalence(p), {k, n}, tt::parse_estimator(estimator),
                             risk_options(budget, threads));
        }
        return summary_dict(s);
      },
      py::arg("p"), py::arg("n"), py::arg("k"), py::arg("estimator") = "mle",
      py::arg("budget") = 50'000'000, py::arg("threads") = 0);
  m.def(
      "monte_carlo_risk",
      [](const Triple& p, int n, int k, const std::string& estimator, std::uint64_t samples,
         std::uint64_t seed, int threads) {
        tt::RiskSummary s;
        {
          py::gil_scoped_release release;
          s = tt::monte_carlo_risk(prevalence(p), {k, n}, tt::parse_estimator(estimator), samples,
                                   seed, risk_options(50'000'000, threads));
        }
        return summary_dict(s);
      },
      py::arg("p"), py::arg("n"), py::arg("k"), py::arg("estimator") = "mle",
      py::arg("samples") = 1'000'000, py::arg("seed") = 1, py::arg("threads") = 0);
}
