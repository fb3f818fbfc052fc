#pragma once

#include <Eigen/Core>
#include <vector>

namespace ldm {

enum class InnerSolver { Direct, IterativeEarlyStop };

// Hierarchical sparse least-squares solver configuration. The gamma
// hyperprior shape enters through eta = beta - 3/2; eta close to zero gives
// strong sparsity promotion (l1-like), larger eta behaves like l2.
struct IasConfig {
  double eta = 1e-3;
  Eigen::VectorXd theta_scales;  // vartheta, positive; empty means all ones
  bool nonneg = false;
  int max_iters = 200;
  double tol_x = 1e-8;
  InnerSolver inner = InnerSolver::Direct;

  static double eta_from_beta(double beta) { return beta - 1.5; }
};

struct IasResult {
  Eigen::VectorXd x;
  Eigen::VectorXd theta;
  std::vector<double> energy_trace;  // Gibbs energy after each full iteration
  int iterations = 0;
  bool converged = false;
};

/// Gibbs energy 0.5|b-Ax|^2 + 0.5 sum x_j^2/theta_j - eta sum log theta_j
/// + sum theta_j/vartheta_j. Throws on nonpositive theta.
double gibbs_energy(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                    const IasConfig& cfg);

/// Exact minimizer of the Gibbs energy over theta_j for fixed x_j.
double theta_update(double x_j, double eta, double vartheta_j);

/// Tikhonov step: argmin |b - Ax|^2 + |D_theta^{-1/2} x|^2, computed in
/// priorconditioned coordinates (primal or dual normal equations, or CGLS
/// with early stopping for the iterative inner solver).
Eigen::VectorXd x_update(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& theta,
                         InnerSolver inner = InnerSolver::Direct);

Eigen::VectorXd project_nonnegative(Eigen::VectorXd x);

// vartheta_j proportional to 1/|a_j|^2, scaled so the median equals
// target_snr^2. Throws on zero columns.
Eigen::VectorXd sensitivity_scales(const Eigen::MatrixXd& a, double target_snr = 1.0);

IasResult ias_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const IasConfig& cfg);

// Same iteration driven by precomputed normal-equation data (gram = AtA,
// atb = Atb, b_norm2 = |b|^2); used where one operator serves many solves.
IasResult ias_solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& atb,
                         double b_norm2, const IasConfig& cfg);

}  // namespace ldm
