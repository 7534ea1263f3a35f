#pragma once

#include <Eigen/Core>

#include "twotrait/types.hpp"

namespace twotrait {

/// Large-sample covariance shared by all three estimators:
/// n * Cov(p_hat) -> sigma / k^2, ordering (p10, p01, p11).
struct AsymptoticCovariance {
  Eigen::Matrix3d sigma;
  int k = 1;

  /// Covariance of p_hat for n pools: sigma / (n k^2).
  Eigen::Matrix3d scaled(int n) const;
  double min_eigenvalue() const;
};

/// O(1/n) bias coefficients: E(p_hat_i) = p_i + bias_i / n + O(n^-2).
struct FirstOrderBias {
  double bias10 = 0.0;
  double bias01 = 0.0;
  double bias11 = 0.0;
};

enum class BiasFamily { MleRmm, Burrows };

/// Requires p strictly inside the simplex.
AsymptoticCovariance covariance_matrix(const TraitPrevalence& p, int k);

FirstOrderBias first_order_bias(const TraitPrevalence& p, int k, BiasFamily family);

}  // namespace twotrait
