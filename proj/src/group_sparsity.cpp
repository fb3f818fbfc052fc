#include "ldm/group_sparsity.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>

#include "ldm/errors.hpp"

namespace ldm {

namespace {
constexpr double kThetaFloor = std::numeric_limits<double>::min();
}

StructuralPrior structural_covariance(const Eigen::MatrixXd& h_j, double epsilon) {
  if (h_j.size() == 0 || h_j.norm() == 0.0)
    throw ConfigError("structural_covariance: all-zero coefficient matrix");
  if (!(epsilon > 0.0)) throw ConfigError("structural_covariance: epsilon must be > 0");

  const Eigen::Index k = h_j.rows();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(h_j, Eigen::ComputeThinU);
  Eigen::MatrixXd u = svd.matrixU();
  const Eigen::VectorXd& sigma = svd.singularValues();
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index imax = 0;
    u.col(c).cwiseAbs().maxCoeff(&imax);
    if (u(imax, c) < 0.0) u.col(c) = -u.col(c);
  }

  StructuralPrior prior;
  prior.epsilon = epsilon;
  prior.singular_ratios = sigma / sigma(0);
  prior.leading_direction = u.col(0);

  prior.covariance = epsilon * Eigen::MatrixXd::Identity(k, k);
  for (Eigen::Index l = 0; l < sigma.size(); ++l) {
    const double ratio = prior.singular_ratios(l);
    if (ratio <= 0.0) break;
    prior.covariance += (ratio * ratio) * u.col(l) * u.col(l).transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior.covariance);
  const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(epsilon);
  prior.inverse = eig.eigenvectors() * vals.cwiseInverse().asDiagonal() *
                  eig.eigenvectors().transpose();
  prior.sqrt = eig.eigenvectors() * vals.cwiseSqrt().asDiagonal() *
               eig.eigenvectors().transpose();
  return prior;
}

double structural_norm_sq(const Eigen::VectorXd& h, const StructuralPrior& prior) {
  if (h.size() != prior.covariance.rows())
    throw ConfigError("structural_norm: dimension mismatch");
  return h.dot(prior.inverse * h);
}

double gs_theta_update(double norm_sq_hj, double eta_j, double vartheta_j) {
  const double value =
      vartheta_j * (0.5 * eta_j + std::sqrt(0.25 * eta_j * eta_j +
                                            norm_sq_hj / (2.0 * vartheta_j)));
  return std::max(value, kThetaFloor);
}

GsResult gs_ias_solve(const std::vector<Eigen::MatrixXd>& w_blocks,
                      const std::vector<StructuralPrior>& priors, const DceModel& dce,
                      const Eigen::VectorXd& b, const GsConfig& cfg) {
  const int K = static_cast<int>(w_blocks.size());
  if (K == 0 || priors.size() != w_blocks.size())
    throw ConfigError("gs_ias_solve: blocks and priors misaligned");
  if (cfg.max_iters < 1) throw ConfigError("gs_ias_solve: max_iters must be positive");

  Eigen::VectorXd eta = cfg.eta.size() ? cfg.eta : Eigen::VectorXd::Constant(K, 1e-3);
  Eigen::VectorXd vartheta =
      cfg.vartheta.size() ? cfg.vartheta : Eigen::VectorXd::Ones(K);
  if (eta.size() != K || vartheta.size() != K)
    throw ConfigError("gs_ias_solve: eta/vartheta length mismatch");
  for (int j = 0; j < K; ++j)
    if (eta(j) < 0.0 || !(vartheta(j) > 0.0))
      throw ConfigError("gs_ias_solve: need eta >= 0 and vartheta > 0");

  Eigen::Index ktot = 0;
  std::vector<Eigen::Index> offset(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    if (w_blocks[static_cast<std::size_t>(j)].rows() != dce.dim())
      throw ConfigError("gs_ias_solve: block row count mismatch");
    if (w_blocks[static_cast<std::size_t>(j)].cols() !=
        priors[static_cast<std::size_t>(j)].covariance.rows())
      throw ConfigError("gs_ias_solve: prior size mismatch");
    offset[static_cast<std::size_t>(j)] = ktot;
    ktot += w_blocks[static_cast<std::size_t>(j)].cols();
  }
  if (b.size() != dce.dim()) throw ConfigError("gs_ias_solve: datum dimension mismatch");

  // priorconditioned stacked operator: B_j = C_DCE^{-1/2} W_j C_j^{1/2}
  const Eigen::VectorXd b_w = dce.whiten_centered(b);
  Eigen::MatrixXd stacked(dce.dim(), ktot);
  for (int j = 0; j < K; ++j)
    stacked.middleCols(offset[static_cast<std::size_t>(j)],
                       w_blocks[static_cast<std::size_t>(j)].cols()) =
        dce.apply_whitener(w_blocks[static_cast<std::size_t>(j)]) *
        priors[static_cast<std::size_t>(j)].sqrt;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(ktot, ktot);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(stacked.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd atb = stacked.transpose() * b_w;
  const double b_norm2 = b_w.squaredNorm();

  GsResult res;
  res.theta = vartheta;
  res.group_norms_sq = Eigen::VectorXd::Zero(K);
  res.h.assign(static_cast<std::size_t>(K), Eigen::VectorXd());
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(ktot);

  for (int it = 0; it < cfg.max_iters; ++it) {
    // h-update: scale each group column block by sqrt(theta_j), ridge solve
    Eigen::VectorXd scale(ktot);
    for (int j = 0; j < K; ++j)
      scale.segment(offset[static_cast<std::size_t>(j)],
                    w_blocks[static_cast<std::size_t>(j)].cols())
          .setConstant(std::sqrt(res.theta(j)));

    Eigen::MatrixXd m = scale.asDiagonal() * gram * scale.asDiagonal();
    m.diagonal().array() += 1.0;
    const Eigen::VectorXd w =
        m.ldlt().solve((scale.array() * atb.array()).matrix());
    const Eigen::VectorXd u = (scale.array() * w.array()).matrix();
    if (!u.allFinite()) throw SolverError("gs_ias_solve: h-update failed");

    Eigen::VectorXd h_all(ktot);
    for (int j = 0; j < K; ++j) {
      const Eigen::Index kj = w_blocks[static_cast<std::size_t>(j)].cols();
      const Eigen::VectorXd hj =
          priors[static_cast<std::size_t>(j)].sqrt *
          u.segment(offset[static_cast<std::size_t>(j)], kj);
      h_all.segment(offset[static_cast<std::size_t>(j)], kj) = hj;
      res.h[static_cast<std::size_t>(j)] = hj;
      res.group_norms_sq(j) =
          structural_norm_sq(hj, priors[static_cast<std::size_t>(j)]);
      res.theta(j) = gs_theta_update(res.group_norms_sq(j), eta(j), vartheta(j));
    }

    // objective: whitened misfit + group penalties
    const double misfit =
        std::max(0.0, b_norm2 - 2.0 * u.dot(atb) + u.dot(gram * u));
    double objective = 0.5 * misfit;
    for (int j = 0; j < K; ++j) {
      if (res.group_norms_sq(j) > 0.0)
        objective += 0.5 * res.group_norms_sq(j) / res.theta(j);
      if (eta(j) > 0.0) objective -= eta(j) * std::log(res.theta(j));
      objective += res.theta(j) / vartheta(j);
    }
    res.objective_trace.push_back(objective);
    res.iterations = it + 1;

    const double change = (h_all - h_prev).norm();
    h_prev = h_all;
    if (change <= cfg.tol * std::max(h_all.norm(), kThetaFloor)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

std::vector<int> threshold_significant(const std::vector<Eigen::VectorXd>& h,
                                       const std::vector<Eigen::MatrixXd>& w_blocks,
                                       const std::vector<DceModel>& cluster_dce) {
  if (h.size() != w_blocks.size() || h.size() != cluster_dce.size())
    throw ConfigError("threshold_significant: misaligned inputs");
  std::vector<int> selected;
  for (std::size_t j = 0; j < h.size(); ++j) {
    const double contribution = (w_blocks[j] * h[j]).squaredNorm();
    if (contribution > cluster_dce[j].trace()) selected.push_back(static_cast<int>(j));
  }
  return selected;
}

std::vector<int> relevance_by_theta(const Eigen::VectorXd& theta, double theta_star) {
  if (theta.size() == 0) throw ConfigError("relevance_by_theta: empty theta");
  if (!(theta_star > 0.0) || !(theta_star < 1.0))
    throw ConfigError("relevance_by_theta: theta_star must lie in (0,1)");
  const double top = theta.maxCoeff();
  if (!(top > 0.0)) throw ConfigError("relevance_by_theta: all theta are zero");
  std::vector<int> selected;
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (theta(j) / top >= theta_star) selected.push_back(static_cast<int>(j));
  return selected;
}

}  // namespace ldm
