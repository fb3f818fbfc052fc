#include <doctest.h>

#include <cmath>

#include "ldm/errors.hpp"
#include "ldm/group_sparsity.hpp"
#include "ldm/ias.hpp"
#include "oracles.hpp"

using namespace ldm;

namespace {

DceModel zero_mean_identity_dce(Eigen::Index n, double eps = 1e-9) {
  return DceModel::from_moments(Eigen::VectorXd::Zero(n),
                                (1.0 - eps) * Eigen::MatrixXd::Identity(n, n), eps);
}

}  // namespace

TEST_CASE("structural_covariance: rank-1, diagonal, and PCA-built coefficient matrices") {
  const double eps = 1e-6;

  // rank-1: C = u1 u1^T + eps I
  const Eigen::VectorXd u = Eigen::Vector2d(3.0, 4.0).normalized();
  const Eigen::MatrixXd h1 = u * Eigen::RowVector3d(1.0, 2.0, -0.5);
  const StructuralPrior p1 = structural_covariance(h1, eps);
  CHECK((p1.covariance - (u * u.transpose() + eps * Eigen::MatrixXd::Identity(2, 2)))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // hand SVD: H = diag(2, 1) gives C = diag(1 + eps, 0.25 + eps)
  const StructuralPrior p2 =
      structural_covariance(Eigen::Vector2d(2.0, 1.0).asDiagonal(), eps);
  CHECK(p2.covariance(0, 0) == doctest::Approx(1.0 + eps).epsilon(1e-12));
  CHECK(p2.covariance(1, 1) == doctest::Approx(0.25 + eps).epsilon(1e-12));
  CHECK(std::abs(p2.covariance(0, 1)) < 1e-14);

  // PCA-compressed cluster: H = Sigma V^T has left singular vectors I
  const Eigen::MatrixXd block = oracles::random_matrix(6, 8, 3);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinV);
  const Eigen::MatrixXd h =
      svd.singularValues().head(3).asDiagonal() * svd.matrixV().leftCols(3).transpose();
  const StructuralPrior p3 = structural_covariance(h, eps);
  const Eigen::VectorXd ratios = svd.singularValues().head(3) / svd.singularValues()(0);
  for (int i = 0; i < 3; ++i)
    CHECK(p3.covariance(i, i) ==
          doctest::Approx(ratios(i) * ratios(i) + eps).epsilon(1e-10));

  CHECK_THROWS_AS(structural_covariance(Eigen::MatrixXd::Zero(2, 3), eps), ConfigError);
}

TEST_CASE("structural_covariance eigenvalues lie in [eps, 1 + eps]") {
  const Eigen::MatrixXd h = oracles::random_matrix(5, 9, 13);
  const double eps = 1e-6;
  const StructuralPrior prior = structural_covariance(h, eps);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior.covariance);
  CHECK(eig.eigenvalues().minCoeff() >= eps * (1.0 - 1e-8));
  CHECK(eig.eigenvalues().maxCoeff() <= 1.0 + eps + 1e-12);

  // top eigenvector matches u1 of the SVD up to sign
  Eigen::BDCSVD<Eigen::MatrixXd> svd(h, Eigen::ComputeThinU);
  const Eigen::VectorXd top = eig.eigenvectors().col(eig.eigenvalues().size() - 1);
  CHECK(std::abs(std::abs(top.dot(svd.matrixU().col(0))) - 1.0) < 1e-8);
  CHECK(std::abs(std::abs(prior.leading_direction.dot(svd.matrixU().col(0))) - 1.0) <
        1e-12);
}

TEST_CASE("structural_norm_sq is the prior quadratic form") {
  const double eps = 1e-12;
  StructuralPrior identity;
  identity.covariance = Eigen::MatrixXd::Identity(2, 2);
  identity.inverse = Eigen::MatrixXd::Identity(2, 2);
  identity.sqrt = Eigen::MatrixXd::Identity(2, 2);
  identity.epsilon = eps;
  CHECK(structural_norm_sq(Eigen::Vector2d(3.0, 4.0), identity) == doctest::Approx(25.0));
  CHECK(structural_norm_sq(Eigen::Vector2d(0.0, 0.0), identity) == 0.0);

  StructuralPrior diag;
  diag.covariance = Eigen::Vector2d(1.0, 0.25).asDiagonal();
  diag.inverse = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  diag.sqrt = Eigen::Vector2d(1.0, 0.5).asDiagonal();
  diag.epsilon = eps;
  CHECK(structural_norm_sq(Eigen::Vector2d(0.0, 1.0), diag) == doctest::Approx(4.0));
  CHECK_THROWS_AS(structural_norm_sq(Eigen::Vector3d(1.0, 1.0, 1.0), diag), ConfigError);
}

TEST_CASE("gs_theta_update matches the scalar stationarity oracle") {
  CHECK(gs_theta_update(0.0, 0.2, 1.0) == doctest::Approx(0.2).epsilon(1e-14));

  // |h|^2 = 4 behaves like a scalar coefficient x = 2
  CHECK(gs_theta_update(4.0, 0.0, 1.0) ==
        doctest::Approx(oracles::theta_stationary_root(2.0, 0.0, 1.0)).epsilon(1e-9));
  // |h|^2 = 1, vartheta = 2, eta = 0.5
  CHECK(gs_theta_update(1.0, 0.5, 2.0) ==
        doctest::Approx(oracles::theta_stationary_root(1.0, 0.5, 2.0)).epsilon(1e-9));
  // group update coincides with the scalar update at norm = |x|
  ldm::Rng rng(7);
  for (int i = 0; i < 30; ++i) {
    const double x = rng.uniform(0.0, 4.0);
    const double eta = rng.uniform(0.0, 1.0);
    const double vt = rng.uniform(0.2, 3.0);
    CHECK(gs_theta_update(x * x, eta, vt) ==
          doctest::Approx(theta_update(x, eta, vt)).epsilon(1e-13));
  }
}

namespace {

struct GsInstance {
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<StructuralPrior> priors;
  DceModel dce;
  Eigen::VectorXd b;
};

GsInstance two_group_instance(std::uint64_t seed) {
  GsInstance inst;
  const Eigen::Index n = 12;
  inst.blocks.push_back(oracles::random_matrix(n, 3, seed));
  inst.blocks.push_back(oracles::random_matrix(n, 4, seed + 1));
  inst.priors.push_back(
      structural_covariance(oracles::random_matrix(3, 7, seed + 2), 1e-6));
  inst.priors.push_back(
      structural_covariance(oracles::random_matrix(4, 7, seed + 3), 1e-6));
  inst.dce = zero_mean_identity_dce(n);

  // datum built from group 1 only, along its leading prior direction
  inst.b = inst.blocks[0] * inst.priors[0].leading_direction;
  return inst;
}

}  // namespace

TEST_CASE("gs_ias_solve concentrates theta on the active group") {
  const GsInstance inst = two_group_instance(21);
  GsConfig cfg;
  const GsResult res = gs_ias_solve(inst.blocks, inst.priors, inst.dce, inst.b, cfg);
  CHECK(res.converged);
  CHECK(res.theta(0) / res.theta(1) > 10.0);

  // long-run fixed point: theta solves its own stationarity at the solution
  for (int j = 0; j < 2; ++j)
    CHECK(res.theta(j) ==
          doctest::Approx(gs_theta_update(res.group_norms_sq(j), 1e-3, 1.0))
              .epsilon(1e-9));
}

TEST_CASE("gs_ias_solve: zero datum gives zero blocks and floor thetas") {
  const GsInstance inst = two_group_instance(31);
  GsConfig cfg;
  cfg.eta = Eigen::Vector2d(0.2, 0.4);
  cfg.vartheta = Eigen::Vector2d(1.0, 2.0);
  const GsResult res = gs_ias_solve(inst.blocks, inst.priors, inst.dce,
                                    Eigen::VectorXd::Zero(12), cfg);
  CHECK(res.h[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.h[1].cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.theta(0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(res.theta(1) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("gs_ias_solve with identity priors on singleton groups equals plain IAS") {
  const Eigen::Index n = 10;
  const int K = 6;
  const Eigen::MatrixXd a = oracles::random_matrix(n, K, 41);
  const Eigen::VectorXd b = oracles::random_vector(n, 42);
  const double eps = 1e-9;

  std::vector<Eigen::MatrixXd> blocks;
  std::vector<StructuralPrior> priors;
  for (int j = 0; j < K; ++j) {
    blocks.push_back(a.col(j));
    StructuralPrior prior;
    prior.covariance = Eigen::MatrixXd::Identity(1, 1);
    prior.inverse = Eigen::MatrixXd::Identity(1, 1);
    prior.sqrt = Eigen::MatrixXd::Identity(1, 1);
    prior.epsilon = eps;
    priors.push_back(prior);
  }

  GsConfig gcfg;
  gcfg.eta = Eigen::VectorXd::Constant(K, 0.01);
  gcfg.vartheta = Eigen::VectorXd::Constant(K, 1.3);
  gcfg.tol = 1e-10;
  const GsResult gs = gs_ias_solve(blocks, priors, zero_mean_identity_dce(n), b, gcfg);

  IasConfig icfg;
  icfg.eta = 0.01;  // eta = beta - 3/2 coincides with beta - (k_j + 2)/2 at k_j = 1
  icfg.theta_scales = Eigen::VectorXd::Constant(K, 1.3);
  icfg.tol_x = 1e-10;
  const IasResult ias = ias_solve(a, b, icfg);

  for (int j = 0; j < K; ++j) {
    CHECK(gs.h[static_cast<std::size_t>(j)](0) ==
          doctest::Approx(ias.x(j)).epsilon(1e-6));
    CHECK(gs.theta(j) == doctest::Approx(ias.theta(j)).epsilon(1e-6));
  }
}

TEST_CASE("gs_ias_solve objective is non-increasing") {
  const GsInstance inst = two_group_instance(51);
  const Eigen::VectorXd datum =
      inst.blocks[0] * oracles::random_vector(3, 52) +
      0.5 * inst.blocks[1] * oracles::random_vector(4, 53);
  GsConfig cfg;
  cfg.eta = Eigen::Vector2d(0.05, 0.05);
  const GsResult res = gs_ias_solve(inst.blocks, inst.priors, inst.dce, datum, cfg);
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
    CHECK(res.objective_trace[i] <=
          res.objective_trace[i - 1] +
              1e-9 * std::max(1.0, std::abs(res.objective_trace[i - 1])));
}

TEST_CASE("threshold_significant compares against the DCE trace") {
  std::vector<Eigen::MatrixXd> blocks{Eigen::MatrixXd::Identity(3, 2),
                                      Eigen::MatrixXd::Identity(3, 2)};
  std::vector<DceModel> dce;
  dce.push_back(DceModel::from_moments(Eigen::VectorXd::Zero(3),
                                       Eigen::MatrixXd::Zero(3, 3), 0.1));  // trace 0.3
  dce.push_back(dce[0]);

  // all-zero coefficients: empty selection (trace > 0 by regularization)
  std::vector<Eigen::VectorXd> h0{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
  CHECK(threshold_significant(h0, blocks, dce).empty());

  // one group at twice the trace, the other silent
  std::vector<Eigen::VectorXd> h1{Eigen::Vector2d(std::sqrt(0.6), 0.0),
                                  Eigen::VectorXd::Zero(2)};
  CHECK(threshold_significant(h1, blocks, dce) == std::vector<int>{0});

  // exact equality is excluded (strict inequality)
  std::vector<Eigen::VectorXd> h2{Eigen::Vector2d(std::sqrt(0.3), 0.0),
                                  Eigen::VectorXd::Zero(2)};
  CHECK(threshold_significant(h2, blocks, dce).empty());
}

TEST_CASE("relevance_by_theta scans the scaled ratios") {
  CHECK(relevance_by_theta(Eigen::Vector3d(1.0, 0.29, 0.31), 0.3) ==
        std::vector<int>{0, 2});
  CHECK(relevance_by_theta(Eigen::Vector3d(0.5, 0.5, 0.5), 0.3) ==
        std::vector<int>{0, 1, 2});
  CHECK(relevance_by_theta(Eigen::VectorXd::Constant(1, 0.123), 0.3) ==
        std::vector<int>{0});

  // invariance under positive rescaling
  const Eigen::VectorXd theta = Eigen::Vector4d(0.9, 0.1, 0.5, 0.31);
  CHECK(relevance_by_theta(theta, 0.3) == relevance_by_theta(17.0 * theta, 0.3));

  CHECK_THROWS_AS(relevance_by_theta(Eigen::Vector2d(0.0, 0.0), 0.3), ConfigError);
  CHECK_THROWS_AS(relevance_by_theta(theta, 1.5), ConfigError);
}
