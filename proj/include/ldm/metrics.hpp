#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "ldm/dictionary.hpp"

namespace ldm {

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 0.0;  // <= 0: range of the two signals combined
};

/// Cardinality of the symmetric difference of the thresholded supports
/// { j : x_j > delta } and { j : x_hat_j > delta }.
int dissimilarity_index(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat,
                        double delta);

/// Default support threshold: 1e-6 times the largest coefficient.
double default_support_delta(const Eigen::VectorXd& x);

/// r_x = |x - x_hat| / |x|.
double relative_error_coeff(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat);

/// r_b = |b - D x_hat| / |b|.
double relative_error_data(const Dictionary& d, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& x_hat);

/// Global-window SSIM over the whole 1-D signal.
double ssim(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const SsimParams& params);

/// DSSIM = (1 - SSIM)/2, in [0, 1].
double dssim(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
             const SsimParams& params = {});

/// Entry (r, c) counts items predicted r+1 with true class c+1.
Eigen::MatrixXi confusion_matrix(const std::vector<int>& true_labels,
                                 const std::vector<int>& pred_labels, int k);

// (precision, recall) of a retrieved set against a non-empty relevant set.
// Empty retrieved set yields precision 0 by convention.
std::pair<double, double> precision_recall(const std::vector<int>& retrieved,
                                           const std::vector<int>& relevant);

/// Spearman rank correlation (average ranks on ties).
double spearman_rho(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace ldm
