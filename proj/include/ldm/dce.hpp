#pragma once

#include <Eigen/Core>
#include <utility>

#include "ldm/compression.hpp"

namespace ldm {

// Gaussian model of the dictionary compression error: mean mu, covariance
// C = S + eps*I with S the (1/p-normalized) sample covariance. Held as the
// eigenstructure of S so the whitener C^{-1/2} applies in O(n * rank) and the
// model stays viable at signal dimensions where dense n x n storage would not.
class DceModel {
 public:
  DceModel() = default;

  /// epsilon <= 0 selects the default rule 1e-6 * trace(S)/n, floored at 1e-12.
  static DceModel fit(const Eigen::MatrixXd& residuals, double epsilon = 0.0);

  /// Model with covariance = covariance_core + epsilon*I (core symmetric PSD).
  static DceModel from_moments(Eigen::VectorXd mean,
                               const Eigen::MatrixXd& covariance_core, double epsilon);

  Eigen::Index dim() const { return mean_.size(); }
  Eigen::Index sample_count() const { return samples_; }
  double epsilon() const { return eps_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& eigenvalues() const { return vals_; }
  const Eigen::MatrixXd& eigenvectors() const { return vecs_; }

  /// trace(C) = sum of eigenvalues + n * epsilon.
  double trace() const;

  // Applies (C + extra_var*I)^{-1/2}; extra_var adds an independent white
  // measurement-noise covariance on top of the compression error.
  Eigen::VectorXd apply_whitener(const Eigen::VectorXd& x, double extra_var = 0.0) const;
  Eigen::MatrixXd apply_whitener(const Eigen::MatrixXd& m, double extra_var = 0.0) const;

  /// C^{-1/2}(b - mu).
  Eigen::VectorXd whiten_centered(const Eigen::VectorXd& b, double extra_var = 0.0) const;

  // Dense materializations; intended for small n (tests, diagnostics).
  Eigen::MatrixXd covariance_dense() const;
  Eigen::MatrixXd whitener_dense() const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd vecs_;  // n x r
  Eigen::VectorXd vals_;  // r, descending, >= 0
  double eps_ = 0.0;
  Eigen::Index samples_ = 0;
};

/// Column l equals block(:, l) - W * H(:, l).
Eigen::MatrixXd compression_error_samples(const Eigen::MatrixXd& block,
                                          const LowRankFactors& factors);

inline DceModel fit_dce(const Eigen::MatrixXd& residuals, double epsilon = 0.0) {
  return DceModel::fit(residuals, epsilon);
}

/// (C^{-1/2} W, C^{-1/2}(b - mu)): the error-enhanced least-squares system.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> whiten_system(const DceModel& model,
                                                          const Eigen::MatrixXd& w,
                                                          const Eigen::VectorXd& b);

}  // namespace ldm
