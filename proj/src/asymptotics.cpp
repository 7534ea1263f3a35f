#include "twotrait/asymptotics.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace twotrait {

namespace {

void require_interior(const TraitPrevalence& p, int k) {
  if (k < 1) throw DomainError("group size k must be >= 1");
  if (!p.in_interior()) {
    throw DomainError("asymptotic formulas need p strictly inside the simplex, got " +
                      to_string(p));
  }
}

// x^(-e) through logs; x > 0 is guaranteed by require_interior.
double inverse_power(double x, int e) { return std::exp(-e * std::log(x)); }

}  // namespace

Eigen::Matrix3d AsymptoticCovariance::scaled(int n) const {
  if (n < 1) throw ContractError("n must be >= 1");
  return sigma / (static_cast<double>(n) * k * k);
}

double AsymptoticCovariance::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(sigma, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

AsymptoticCovariance covariance_matrix(const TraitPrevalence& p, int k) {
  require_interior(p, k);
  const double p00 = p.p00();
  const double p10 = p.p10;
  const double p01 = p.p01;
  const double lam10 = p00 + p10;
  const double lam01 = p00 + p01;

  const double inv_l10 = inverse_power(lam10, k);  // 1 / lambda10^k
  const double inv_l01 = inverse_power(lam01, k);
  const double inv_p00 = inverse_power(p00, k);
  // p00^k / (lambda10^k lambda01^k)
  const double joint = std::exp(k * (std::log(p00) - std::log(lam10) - std::log(lam01)));

  const double s11 = p10 * p10 * (inv_l10 - 1.0) + p00 * p00 * (inv_p00 - inv_l10);
  const double s22 = p01 * p01 * (inv_l01 - 1.0) + p00 * p00 * (inv_p00 - inv_l01);
  const double s21 = p10 * p01 * (joint - 1.0) + p00 * p10 * (joint - inv_l10) +
                     p00 * p01 * (joint - inv_l01) +
                     p00 * p00 * (joint - inv_l10 - inv_l01 + inv_p00);
  const double tail = p00 * p00 * (inv_l10 + inv_l01 - joint - inv_p00);
  const double s31 = p10 * p10 * (1.0 - inv_l10) + (p10 * p01 + p00 * p10) * (1.0 - joint) +
                     p00 * p01 * (inv_l01 - joint) + tail;
  const double s32 = p01 * p01 * (1.0 - inv_l01) + (p10 * p01 + p00 * p01) * (1.0 - joint) +
                     p00 * p10 * (inv_l10 - joint) + tail;
  const double s33 = p10 * p10 * (inv_l10 - 1.0) + p01 * p01 * (inv_l01 - 1.0) +
                     2.0 * (p10 * p01 + p00 * p10 + p00 * p01) * (joint - 1.0) +
                     p00 * p00 * (2.0 * joint + inv_p00 - inv_l10 - inv_l01 - 1.0);

  AsymptoticCovariance out;
  out.k = k;
  // Lower triangle, mirrored.
  out.sigma << s11, s21, s31,  //
      s21, s22, s32,           //
      s31, s32, s33;
  return out;
}

FirstOrderBias first_order_bias(const TraitPrevalence& p, int k, BiasFamily family) {
  require_interior(p, k);
  if (family == BiasFamily::Burrows || k == 1) return {};
  const double p00 = p.p00();
  const double scale = (k - 1) / (2.0 * k * k);
  const double inv_p00 = inverse_power(p00, k - 1);
  const double inv_l10 = inverse_power(p00 + p.p10, k - 1);
  const double inv_l01 = inverse_power(p00 + p.p01, k - 1);
  return {scale * (p.p10 + inv_p00 - inv_l10), scale * (p.p01 + inv_p00 - inv_l01),
          scale * (p.p11 + inv_l01 + inv_l10 - inv_p00 - 1.0)};
}

}  // namespace twotrait
