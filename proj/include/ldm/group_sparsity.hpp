#pragma once

#include <Eigen/Core>
#include <vector>

#include "ldm/dce.hpp"

namespace ldm {

// Structural cone prior for one group: covariance built from the SVD of the
// cluster coefficient matrix H_j, concentrating prior mass in the cone of the
// observed coefficient directions.
struct StructuralPrior {
  Eigen::MatrixXd covariance;  // k_j x k_j, eigenvalues in [eps, 1 + eps]
  Eigen::MatrixXd inverse;
  Eigen::MatrixXd sqrt;        // symmetric PSD square root
  double epsilon = 0.0;
  Eigen::VectorXd leading_direction;  // u_1 of H_j
  Eigen::VectorXd singular_ratios;    // sigma_l / sigma_1
};

/// C = u1 u1^T + sum_{l>=2} (sigma_l/sigma_1)^2 u_l u_l^T + eps I.
StructuralPrior structural_covariance(const Eigen::MatrixXd& h_j, double epsilon = 1e-6);

/// Squared structural norm h^T [C^(j)]^{-1} h.
double structural_norm_sq(const Eigen::VectorXd& h, const StructuralPrior& prior);

/// Group variance update: exact minimizer of the group Gibbs energy in theta_j.
double gs_theta_update(double norm_sq_hj, double eta_j, double vartheta_j);

struct GsConfig {
  Eigen::VectorXd eta;       // per group; empty means 1e-3 for all
  Eigen::VectorXd vartheta;  // per group; empty means 1 for all
  int max_iters = 200;
  double tol = 1e-8;

  /// Group-dimension convention: eta_j = beta_j - (k_j + 2)/2.
  static double eta_from_beta(double beta, Eigen::Index group_dim) {
    return beta - 0.5 * static_cast<double>(group_dim + 2);
  }
};

struct GsResult {
  std::vector<Eigen::VectorXd> h;  // one block per group
  Eigen::VectorXd theta;           // length K
  Eigen::VectorXd group_norms_sq;  // structural norms at the solution
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
};

// Alternates the DCE-whitened Tikhonov h-update (block penalty
// h^T (theta_j C^(j))^{-1} h) with the closed-form group theta update.
GsResult gs_ias_solve(const std::vector<Eigen::MatrixXd>& w_blocks,
                      const std::vector<StructuralPrior>& priors, const DceModel& dce,
                      const Eigen::VectorXd& b, const GsConfig& cfg);

/// J = { j : |W^(j) h^(j)|^2 > trace(C_DCE^(j)) }, ascending, 0-based.
std::vector<int> threshold_significant(const std::vector<Eigen::VectorXd>& h,
                                       const std::vector<Eigen::MatrixXd>& w_blocks,
                                       const std::vector<DceModel>& cluster_dce);

/// J = { j : theta_j / max(theta) >= theta_star }, ascending, 0-based.
std::vector<int> relevance_by_theta(const Eigen::VectorXd& theta, double theta_star);

}  // namespace ldm
