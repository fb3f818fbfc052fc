#include "ldm/dce.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "ldm/errors.hpp"

namespace ldm {

DceModel DceModel::fit(const Eigen::MatrixXd& residuals, double epsilon) {
  const Eigen::Index n = residuals.rows();
  const Eigen::Index p = residuals.cols();
  if (n < 1 || p < 1) throw ConfigError("fit_dce: empty residual matrix");
  if (!residuals.allFinite()) throw ConfigError("fit_dce: non-finite residuals");

  DceModel model;
  model.mean_ = residuals.rowwise().mean();
  model.samples_ = p;

  Eigen::MatrixXd centered = residuals.colwise() - model.mean_;
  centered /= std::sqrt(static_cast<double>(p));  // population 1/p normalization
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  model.vecs_ = svd.matrixU();
  model.vals_ = svd.singularValues().array().square();

  const double core_trace = model.vals_.sum();
  model.eps_ = epsilon > 0.0
                   ? epsilon
                   : std::max(1e-12, 1e-6 * core_trace / static_cast<double>(n));
  return model;
}

DceModel DceModel::from_moments(Eigen::VectorXd mean,
                                const Eigen::MatrixXd& covariance_core,
                                double epsilon) {
  if (covariance_core.rows() != covariance_core.cols() ||
      covariance_core.rows() != mean.size())
    throw ConfigError("DceModel: covariance/mean dimension mismatch");
  if (!(epsilon > 0.0)) throw ConfigError("DceModel: epsilon must be positive");
  if ((covariance_core - covariance_core.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, covariance_core.cwiseAbs().maxCoeff()))
    throw ConfigError("DceModel: covariance core must be symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance_core);
  DceModel model;
  model.mean_ = std::move(mean);
  model.samples_ = 0;
  model.eps_ = epsilon;
  const Eigen::Index n = eig.eigenvalues().size();
  model.vals_ = Eigen::VectorXd(n);
  model.vecs_ = Eigen::MatrixXd(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {  // descending order
    model.vals_(i) = std::max(0.0, eig.eigenvalues()(n - 1 - i));
    model.vecs_.col(i) = eig.eigenvectors().col(n - 1 - i);
  }
  return model;
}

double DceModel::trace() const {
  return vals_.sum() + eps_ * static_cast<double>(dim());
}

Eigen::VectorXd DceModel::apply_whitener(const Eigen::VectorXd& x, double extra_var) const {
  const double floor = eps_ + extra_var;
  const double base = 1.0 / std::sqrt(floor);
  Eigen::VectorXd coeff = vecs_.transpose() * x;
  for (Eigen::Index i = 0; i < coeff.size(); ++i)
    coeff(i) *= 1.0 / std::sqrt(vals_(i) + floor) - base;
  return base * x + vecs_ * coeff;
}

Eigen::MatrixXd DceModel::apply_whitener(const Eigen::MatrixXd& m, double extra_var) const {
  const double floor = eps_ + extra_var;
  const double base = 1.0 / std::sqrt(floor);
  Eigen::MatrixXd coeff = vecs_.transpose() * m;
  for (Eigen::Index i = 0; i < coeff.rows(); ++i)
    coeff.row(i) *= 1.0 / std::sqrt(vals_(i) + floor) - base;
  return base * m + vecs_ * coeff;
}

Eigen::VectorXd DceModel::whiten_centered(const Eigen::VectorXd& b, double extra_var) const {
  if (b.size() != dim()) throw ConfigError("DceModel: vector dimension mismatch");
  const Eigen::VectorXd centered = b - mean_;
  return apply_whitener(centered, extra_var);
}

Eigen::MatrixXd DceModel::covariance_dense() const {
  Eigen::MatrixXd c = vecs_ * vals_.asDiagonal() * vecs_.transpose();
  c.diagonal().array() += eps_;
  return c;
}

Eigen::MatrixXd DceModel::whitener_dense() const {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim(), dim());
  return apply_whitener(id);
}

Eigen::MatrixXd compression_error_samples(const Eigen::MatrixXd& block,
                                          const LowRankFactors& factors) {
  if (factors.w.rows() != block.rows() || factors.h.cols() != block.cols() ||
      factors.w.cols() != factors.h.rows())
    throw ConfigError("compression_error_samples: dimension mismatch");
  return block - factors.w * factors.h;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> whiten_system(const DceModel& model,
                                                          const Eigen::MatrixXd& w,
                                                          const Eigen::VectorXd& b) {
  if (w.rows() != model.dim() || b.size() != model.dim())
    throw ConfigError("whiten_system: dimension mismatch");
  return {model.apply_whitener(w), model.whiten_centered(b)};
}

}  // namespace ldm
