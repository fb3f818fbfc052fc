#include "ldm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ldm/errors.hpp"

namespace ldm {

int dissimilarity_index(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat,
                        double delta) {
  if (x.size() != x_hat.size()) throw ConfigError("dissimilarity_index: length mismatch");
  if (!(delta > 0.0)) throw ConfigError("dissimilarity_index: delta must be positive");
  int count = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if ((x(j) > delta) != (x_hat(j) > delta)) ++count;
  return count;
}

double default_support_delta(const Eigen::VectorXd& x) {
  return 1e-6 * x.maxCoeff();
}

double relative_error_coeff(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat) {
  if (x.size() != x_hat.size()) throw ConfigError("relative_error_coeff: length mismatch");
  const double nrm = x.norm();
  if (!(nrm > 0.0)) throw ConfigError("relative_error_coeff: zero reference vector");
  return (x - x_hat).norm() / nrm;
}

double relative_error_data(const Dictionary& d, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& x_hat) {
  if (b.size() != d.dim() || x_hat.size() != d.size())
    throw ConfigError("relative_error_data: dimension mismatch");
  const double nrm = b.norm();
  if (!(nrm > 0.0)) throw ConfigError("relative_error_data: zero datum");
  return (b - d.atoms * x_hat).norm() / nrm;
}

double ssim(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const SsimParams& params) {
  if (a.size() != b.size() || a.size() < 1) throw ConfigError("ssim: length mismatch");
  if (!(params.k1 > 0.0) || !(params.k2 > 0.0))
    throw ConfigError("ssim: stabilizers must be positive");

  const double n = static_cast<double>(a.size());
  const double mu_a = a.mean();
  const double mu_b = b.mean();
  const double var_a = (a.array() - mu_a).square().sum() / n;
  const double var_b = (b.array() - mu_b).square().sum() / n;
  const double cov = ((a.array() - mu_a) * (b.array() - mu_b)).sum() / n;

  double range = params.dynamic_range;
  if (!(range > 0.0)) {
    range = std::max(a.maxCoeff(), b.maxCoeff()) - std::min(a.minCoeff(), b.minCoeff());
    if (!(range > 0.0)) range = 1.0;  // two identical constant signals
  }
  const double c1 = params.k1 * range * params.k1 * range;
  const double c2 = params.k2 * range * params.k2 * range;
  return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
         ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

double dssim(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const SsimParams& params) {
  return 0.5 * (1.0 - ssim(a, b, params));
}

Eigen::MatrixXi confusion_matrix(const std::vector<int>& true_labels,
                                 const std::vector<int>& pred_labels, int k) {
  if (true_labels.size() != pred_labels.size())
    throw ConfigError("confusion_matrix: label count mismatch");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i];
    const int p = pred_labels[i];
    if (t < 1 || t > k || p < 1 || p > k)
      throw ConfigError("confusion_matrix: label out of range");
    m(p - 1, t - 1) += 1;
  }
  return m;
}

std::pair<double, double> precision_recall(const std::vector<int>& retrieved,
                                           const std::vector<int>& relevant) {
  if (relevant.empty()) throw ConfigError("precision_recall: empty relevant set");
  const std::set<int> rel(relevant.begin(), relevant.end());
  const std::set<int> ret(retrieved.begin(), retrieved.end());
  std::size_t hits = 0;
  for (int r : ret) hits += rel.count(r);
  const double precision =
      ret.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(ret.size());
  const double recall = static_cast<double>(hits) / static_cast<double>(rel.size());
  return {precision, recall};
}

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && v(order[static_cast<std::size_t>(j + 1)]) ==
                            v(order[static_cast<std::size_t>(i)]))
      ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index t = i; t <= j; ++t) ranks(order[static_cast<std::size_t>(t)]) = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("spearman_rho: bad input");
  const Eigen::VectorXd ra = average_ranks(a);
  const Eigen::VectorXd rb = average_ranks(b);
  const double ma = ra.mean();
  const double mb = rb.mean();
  const double num = ((ra.array() - ma) * (rb.array() - mb)).sum();
  const double den = std::sqrt((ra.array() - ma).square().sum() *
                               (rb.array() - mb).square().sum());
  if (!(den > 0.0)) throw ConfigError("spearman_rho: degenerate ranks");
  return num / den;
}

}  // namespace ldm
