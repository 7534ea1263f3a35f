#include "twotrait/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "twotrait/detail/numeric.hpp"

namespace twotrait {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_closure(const TraitPrevalence& p) {
  if (!p.in_closure()) {
    throw DomainError("prevalence " + to_string(p) + " is outside the closed simplex");
  }
}

void require_group_size(int k) {
  if (k < 1) throw DomainError("group size k must be >= 1, got " + std::to_string(k));
}

}  // namespace

bool TraitPrevalence::in_closure() const noexcept {
  const bool finite = std::isfinite(p10) && std::isfinite(p01) && std::isfinite(p11);
  return finite && p10 >= 0.0 && p01 >= 0.0 && p11 >= 0.0 && p10 <= 1.0 && p01 <= 1.0 &&
         p11 <= 1.0 && p00() >= -detail::kSumSlack;
}

bool TraitPrevalence::in_interior() const noexcept {
  return in_closure() && p10 > 0.0 && p01 > 0.0 && p11 > 0.0 && p00() > 0.0 && p10 < 1.0 &&
         p01 < 1.0 && p11 < 1.0;
}

void PoolDesign::validate() const {
  if (k < 1) throw DomainError("group size k must be >= 1, got " + std::to_string(k));
  if (n < 1) throw DomainError("pool count n must be >= 1, got " + std::to_string(n));
}

void PoolCounts::validate(const PoolDesign& design) const {
  if (x00 < 0 || x10 < 0 || x01 < 0 || x11 < 0) {
    throw ContractError("negative pool count in " + to_string(*this));
  }
  if (total() != design.n) {
    throw ContractError("counts " + to_string(*this) + " sum to " + std::to_string(total()) +
                        " but n = " + std::to_string(design.n));
  }
}

std::string to_string(const TraitPrevalence& p) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << p.p10 << ", " << p.p01 << ", " << p.p11 << ")";
  return os.str();
}

std::string to_string(const PoolCounts& x) {
  std::ostringstream os;
  os << "(" << x.x00 << ", " << x.x10 << ", " << x.x01 << ", " << x.x11 << ")";
  return os.str();
}

PoolCellProbabilities pool_cells(const TraitPrevalence& p, int k, Validation mode) {
  require_group_size(k);
  if (mode == Validation::Checked) require_closure(p);

  const double p00 = p.p00();
  const double c = detail::ipow(p00, k);
  const double a = detail::ipow(p00 + p.p10, k);
  const double b = detail::ipow(p00 + p.p01, k);

  PoolCellProbabilities out;
  out.theta00 = c;
  out.theta.theta10 = a - c;
  out.theta.theta01 = b - c;
  out.theta.theta11 = 1.0 - a - b + c;
  if (mode == Validation::Checked) {
    out.theta00 = detail::clamp_tiny_negative(out.theta00);
    out.theta.theta10 = detail::clamp_tiny_negative(out.theta.theta10);
    out.theta.theta01 = detail::clamp_tiny_negative(out.theta.theta01);
    out.theta.theta11 = detail::clamp_tiny_negative(out.theta.theta11);
  }
  return out;
}

ThetaVector theta_from_p(const TraitPrevalence& p, int k, Validation mode) {
  return pool_cells(p, k, mode).theta;
}

std::array<double, 4> log_pool_cells(const TraitPrevalence& p, int k) {
  const PoolCellProbabilities cells = pool_cells(p, k);
  auto safe_log = [](double v) { return v > 0.0 ? std::log(v) : kNegInf; };
  const double p00 = p.p00();
  return {p00 > 0.0 ? k * std::log(p00) : kNegInf, safe_log(cells.theta.theta10),
          safe_log(cells.theta.theta01), safe_log(cells.theta.theta11)};
}

TraitPrevalence p_from_theta(const PoolCellProbabilities& cells, int k) {
  require_group_size(k);
  const auto& t = cells.theta;
  if (cells.theta00 < 0.0 || t.theta10 < 0.0 || t.theta01 < 0.0 || t.theta11 < 0.0) {
    throw DomainError("negative pool cell probability");
  }
  const double inv_k = 1.0 / k;
  const double p00 = std::pow(cells.theta00, inv_k);
  const double p10 = std::pow(cells.theta00 + t.theta10, inv_k) - p00;
  const double p01 = std::pow(cells.theta00 + t.theta01, inv_k) - p00;
  return {p10, p01, 1.0 - p00 - p10 - p01};
}

TraitPrevalence p_from_theta(const ThetaVector& theta, int k) {
  return p_from_theta(PoolCellProbabilities{theta, theta.theta00()}, k);
}

double membership_sum(const PoolCounts& x, const PoolDesign& design) {
  const int n = design.n;
  const int k = design.k;
  return detail::kth_root(x.x00 + x.x10, n, k) + detail::kth_root(x.x00 + x.x01, n, k) -
         detail::kth_root(x.x00, n, k);
}

bool in_closure_region(const PoolCounts& x, const PoolDesign& design) {
  design.validate();
  x.validate(design);
  return membership_sum(x, design) <= 1.0 + kMembershipTolerance;
}

double log_multinomial_coefficient(const PoolCounts& x) {
  return std::lgamma(x.total() + 1.0) - std::lgamma(x.x00 + 1.0) - std::lgamma(x.x10 + 1.0) -
         std::lgamma(x.x01 + 1.0) - std::lgamma(x.x11 + 1.0);
}

double log_likelihood(const TraitPrevalence& p, const PoolCounts& x, const PoolDesign& design,
                      bool include_coefficient) {
  design.validate();
  x.validate(design);
  const auto log_theta = log_pool_cells(p, design.k);
  const auto counts = x.cells();
  double kernel = 0.0;
  for (std::size_t s = 0; s < 4; ++s) {
    if (counts[s] == 0) continue;
    if (log_theta[s] == kNegInf) return kNegInf;
    kernel += counts[s] * log_theta[s];
  }
  return include_coefficient ? kernel + log_multinomial_coefficient(x) : kernel;
}

double reduced_log_likelihood(const ReducedPrevalence& pstar, const PoolCounts& x,
                              const PoolDesign& design) {
  return log_likelihood(pstar.full(), x, design, false);
}

DesignTables::DesignTables(const PoolDesign& design)
    : design_(design), eta_((design.k - 1) / (2.0 * design.k)) {
  design_.validate();
  const auto size = static_cast<std::size_t>(design.n) + 1;
  root_.resize(size);
  shrunk_.resize(size);
  log_fact_.resize(size);
  const double inv_k = 1.0 / design.k;
  for (int j = 0; j <= design.n; ++j) {
    const auto i = static_cast<std::size_t>(j);
    root_[i] = detail::kth_root(j, design.n, design.k);
    shrunk_[i] = std::pow((j + eta_) / (design.n + eta_), inv_k);
    log_fact_[i] = std::lgamma(j + 1.0);
  }
}

}  // namespace twotrait
