#include <doctest.h>

#include <cmath>

#include "ldm/errors.hpp"
#include "ldm/ias.hpp"
#include "oracles.hpp"

using namespace ldm;

TEST_CASE("gibbs_energy evaluates the exact formula") {
  // x = 0, theta = vartheta, b = 0: energy = -eta sum log(vartheta) + p
  const Eigen::Index p = 4;
  IasConfig cfg;
  cfg.eta = 0.25;
  cfg.theta_scales = Eigen::VectorXd::LinSpaced(p, 0.5, 2.0);
  const Eigen::MatrixXd a = oracles::random_matrix(3, p, 2);
  const double e0 = gibbs_energy(a, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(p),
                                 cfg.theta_scales, cfg);
  const double expected =
      -cfg.eta * cfg.theta_scales.array().log().sum() + static_cast<double>(p);
  CHECK(e0 == doctest::Approx(expected).epsilon(1e-14));

  // scalar hand case: A = I1, b = x = theta = vartheta = 1, beta = 3/2
  IasConfig unit;
  unit.eta = IasConfig::eta_from_beta(1.5);
  unit.theta_scales = Eigen::VectorXd::Ones(1);
  const double e1 = gibbs_energy(Eigen::MatrixXd::Identity(1, 1),
                                 Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1),
                                 Eigen::VectorXd::Ones(1), unit);
  CHECK(e1 == doctest::Approx(1.5).epsilon(1e-14));

  // zero data and zero x: only the theta terms survive
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(p, 0.7);
  const double e2 = gibbs_energy(a, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(p),
                                 theta, cfg);
  CHECK(e2 == doctest::Approx(-cfg.eta * p * std::log(0.7) + 0.7 *
        cfg.theta_scales.cwiseInverse().sum()).epsilon(1e-12));

  theta(1) = 0.0;
  CHECK_THROWS_AS(gibbs_energy(a, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(p),
                               theta, cfg),
                  SolverError);
}

TEST_CASE("theta_update solves the stationarity condition (root-finder oracle)") {
  // zero coefficient: theta = vartheta * eta exactly
  CHECK(theta_update(0.0, 0.1, 1.0) == doctest::Approx(0.1).epsilon(1e-14));

  // frozen oracle values from bisection on dE/dtheta = 0
  const double root_a = oracles::theta_stationary_root(2.0, 0.0, 1.0);
  CHECK(root_a == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK(theta_update(2.0, 0.0, 1.0) == doctest::Approx(root_a).epsilon(1e-9));

  const double root_b = oracles::theta_stationary_root(1.0, 0.5, 2.0);
  CHECK(root_b == doctest::Approx(1.618033988749895).epsilon(1e-9));
  CHECK(theta_update(1.0, 0.5, 2.0) == doctest::Approx(root_b).epsilon(1e-9));

  // grid of random cases against the oracle
  ldm::Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const double x = rng.gaussian() * 3.0;
    const double eta = rng.uniform(0.0, 2.0);
    const double vt = rng.uniform(0.1, 5.0);
    CHECK(theta_update(x, eta, vt) ==
          doctest::Approx(oracles::theta_stationary_root(x, eta, vt)).epsilon(1e-8));
  }
}

TEST_CASE("theta_update output is positive and at least vartheta * eta") {
  ldm::Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.gaussian();
    const double eta = rng.uniform(0.0, 1.0);
    const double vt = rng.uniform(1e-3, 10.0);
    const double theta = theta_update(x, eta, vt);
    CHECK(theta > 0.0);
    CHECK(theta >= vt * eta - 1e-16);
  }
}

TEST_CASE("x_update solves the Tikhonov problem") {
  // A = I1, b = 1, theta = 1: closed form (AtA + 1/theta)^{-1} Atb = 1/2
  const Eigen::MatrixXd a1 = Eigen::MatrixXd::Identity(1, 1);
  CHECK(x_update(a1, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1))(0) ==
        doctest::Approx(0.5).epsilon(1e-12));

  // huge theta: vanishing penalty
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd b = oracles::random_vector(4, 10);
  const Eigen::VectorXd x_big =
      x_update(a, b, Eigen::VectorXd::Constant(4, 1e12));
  CHECK((x_big - b).norm() / b.norm() < 1e-5);

  // tiny theta: dominant penalty
  const Eigen::VectorXd x_small =
      x_update(a, b, Eigen::VectorXd::Constant(4, 1e-12));
  CHECK(x_small.cwiseAbs().maxCoeff() < 1e-10);

  // primal, dual and CGLS paths agree against the dense normal equations
  ldm::Rng rng(11);
  for (const auto shape : {std::pair<int, int>{9, 5}, std::pair<int, int>{5, 9}}) {
    const Eigen::MatrixXd m = oracles::random_matrix(shape.first, shape.second,
                                                     rng.next_u64());
    const Eigen::VectorXd rhs = oracles::random_vector(shape.first, rng.next_u64());
    Eigen::VectorXd theta(shape.second);
    for (Eigen::Index j = 0; j < theta.size(); ++j) theta(j) = rng.uniform(0.1, 3.0);

    const Eigen::MatrixXd reg =
        m.transpose() * m + Eigen::MatrixXd(theta.cwiseInverse().asDiagonal());
    const Eigen::VectorXd oracle = reg.ldlt().solve(m.transpose() * rhs);
    CHECK((x_update(m, rhs, theta) - oracle).norm() < 1e-9 * (1.0 + oracle.norm()));
    CHECK((x_update(m, rhs, theta, InnerSolver::IterativeEarlyStop) - oracle).norm() <
          2e-4 * (1.0 + oracle.norm()));
  }
}

TEST_CASE("project_nonnegative clamps entrywise") {
  Eigen::VectorXd v(3);
  v << 1.0, -2.0, 3.0;
  CHECK(project_nonnegative(v) == Eigen::Vector3d(1.0, 0.0, 3.0));
  CHECK(project_nonnegative(Eigen::Vector3d(1.0, 0.5, 2.0)) ==
        Eigen::Vector3d(1.0, 0.5, 2.0));
  CHECK(project_nonnegative(Eigen::Vector3d(-1.0, -0.5, -2.0)) ==
        Eigen::Vector3d(0.0, 0.0, 0.0));
}

TEST_CASE("sensitivity_scales follows the inverse column-norm profile") {
  // orthonormal columns: all scales equal target_snr^2
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(4, 3);
  const Eigen::VectorXd flat = sensitivity_scales(q, 2.0);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(flat(j) == doctest::Approx(4.0));

  // doubling one column divides its scale by 4 relative to the others
  Eigen::MatrixXd m = oracles::random_matrix(5, 3, 61);
  Eigen::MatrixXd scaled = m;
  scaled.col(1) *= 2.0;
  const Eigen::VectorXd base = sensitivity_scales(m, 1.0);
  const Eigen::VectorXd after = sensitivity_scales(scaled, 1.0);
  CHECK((after(1) / after(0)) ==
        doctest::Approx(0.25 * base(1) / base(0)).epsilon(1e-10));

  // single column: the median rule pins the scalar to target_snr^2
  const Eigen::MatrixXd single = 7.5 * oracles::random_matrix(6, 1, 62);
  CHECK(sensitivity_scales(single, 3.0)(0) == doctest::Approx(9.0).epsilon(1e-12));

  Eigen::MatrixXd with_zero = m;
  with_zero.col(2).setZero();
  CHECK_THROWS_AS(sensitivity_scales(with_zero, 1.0), ConfigError);
}

TEST_CASE("ias_solve: exact sparse recovery on an orthonormal pair") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 1;
  IasConfig cfg;
  cfg.eta = 1e-3;
  const IasResult res = ias_solve(a, Eigen::Vector2d(1.0, 0.0), cfg);
  CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(std::abs(res.x(1)) < 1e-3);
  CHECK(res.converged);
}

TEST_CASE("ias_solve: zero data collapses to the prior floor") {
  const Eigen::MatrixXd a = oracles::random_matrix(4, 6, 71);
  IasConfig cfg;
  cfg.eta = 0.05;
  cfg.theta_scales = Eigen::VectorXd::Constant(6, 1.5);
  const IasResult res = ias_solve(a, Eigen::VectorXd::Zero(4), cfg);
  CHECK(res.x.cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index j = 0; j < 6; ++j)
    CHECK(res.theta(j) == doctest::Approx(1.5 * 0.05).epsilon(1e-12));
}

TEST_CASE("ias_solve approaches the scaled l1 solution (FISTA oracle)") {
  const Eigen::MatrixXd a = oracles::random_matrix(5, 12, 81);
  Eigen::VectorXd x_true = Eigen::VectorXd::Zero(12);
  x_true(2) = 1.3;
  x_true(7) = -0.8;
  const Eigen::VectorXd b = a * x_true + 0.01 * oracles::random_vector(5, 82);

  IasConfig cfg;
  cfg.eta = 1e-4;
  cfg.theta_scales = sensitivity_scales(a, 1.0);
  cfg.max_iters = 2000;
  const IasResult res = ias_solve(a, b, cfg);

  const Eigen::VectorXd weights =
      (std::sqrt(2.0) * cfg.theta_scales.cwiseSqrt().cwiseInverse());
  const Eigen::VectorXd x_l1 = oracles::fista_l1(a, b, weights);
  CHECK((res.x - x_l1).norm() / x_l1.norm() < 0.02);
}

TEST_CASE("ias_solve distance to the l1 oracle shrinks as eta -> 0") {
  const Eigen::MatrixXd a = oracles::random_matrix(8, 16, 91);
  Eigen::VectorXd x_true = Eigen::VectorXd::Zero(16);
  x_true(1) = 2.0;
  x_true(9) = 1.0;
  const Eigen::VectorXd b = a * x_true + 0.02 * oracles::random_vector(8, 92);

  IasConfig cfg;
  cfg.theta_scales = Eigen::VectorXd::Ones(16);
  cfg.max_iters = 4000;
  cfg.tol_x = 1e-12;
  const Eigen::VectorXd x_l1 =
      oracles::fista_l1(a, b, Eigen::VectorXd::Constant(16, std::sqrt(2.0)));

  double prev = std::numeric_limits<double>::infinity();
  for (const double eta : {1e-1, 1e-2, 1e-3, 1e-4}) {
    cfg.eta = eta;
    const double dist = (ias_solve(a, b, cfg).x - x_l1).norm();
    CHECK(dist <= prev + 1e-9);
    prev = dist;
  }
}

TEST_CASE("ias half-steps never increase the Gibbs energy (50 instances)") {
  ldm::Rng rng(123);
  for (int instance = 0; instance < 50; ++instance) {
    const Eigen::Index n = 4 + rng.uniform_int(5);
    const Eigen::Index p = 3 + rng.uniform_int(8);
    const Eigen::MatrixXd a = oracles::random_matrix(n, p, rng.next_u64());
    const Eigen::VectorXd b = oracles::random_vector(n, rng.next_u64());

    IasConfig cfg;
    cfg.eta = rng.uniform(1e-4, 0.5);
    cfg.theta_scales = Eigen::VectorXd::Constant(p, rng.uniform(0.5, 2.0));

    Eigen::VectorXd theta = cfg.theta_scales;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
    for (int it = 0; it < 6; ++it) {
      const double before = gibbs_energy(a, b, x, theta, cfg);
      x = x_update(a, b, theta);
      const double after_x = gibbs_energy(a, b, x, theta, cfg);
      CHECK(after_x <= before + 1e-9 * std::max(1.0, std::abs(before)));
      for (Eigen::Index j = 0; j < p; ++j)
        theta(j) = theta_update(x(j), cfg.eta, cfg.theta_scales(j));
      const double after_theta = gibbs_energy(a, b, x, theta, cfg);
      CHECK(after_theta <= after_x + 1e-9 * std::max(1.0, std::abs(after_x)));
    }
  }
}

TEST_CASE("ias energy trace is non-increasing and theta is stationary at the end") {
  const Eigen::MatrixXd a = oracles::random_matrix(6, 10, 131);
  const Eigen::VectorXd b = oracles::random_vector(6, 132);
  IasConfig cfg;
  cfg.eta = 0.01;
  cfg.theta_scales = Eigen::VectorXd::Constant(10, 1.2);
  cfg.max_iters = 500;
  const IasResult res = ias_solve(a, b, cfg);
  CHECK(res.converged);

  for (std::size_t i = 1; i < res.energy_trace.size(); ++i)
    CHECK(res.energy_trace[i] <=
          res.energy_trace[i - 1] + 1e-9 * std::max(1.0, std::abs(res.energy_trace[i - 1])));

  // central finite differences of the energy in each theta_j
  for (Eigen::Index j = 0; j < 10; ++j) {
    const double h = 1e-6 * res.theta(j);
    Eigen::VectorXd up = res.theta, dn = res.theta;
    up(j) += h;
    dn(j) -= h;
    const double deriv = (gibbs_energy(a, b, res.x, up, cfg) -
                          gibbs_energy(a, b, res.x, dn, cfg)) /
                         (2.0 * h);
    CHECK(std::abs(deriv) < 1e-8);
  }
}

TEST_CASE("ias_solve honors the nonnegativity projection") {
  const Eigen::MatrixXd a = oracles::random_matrix(6, 9, 141);
  const Eigen::VectorXd b = oracles::random_vector(6, 142);
  IasConfig cfg;
  cfg.eta = 1e-3;
  cfg.nonneg = true;
  const IasResult res = ias_solve(a, b, cfg);
  CHECK(res.x.minCoeff() >= 0.0);
}

TEST_CASE("ias_solve_gram matches ias_solve on the same instance") {
  const Eigen::MatrixXd a = oracles::random_matrix(7, 5, 151);
  const Eigen::VectorXd b = oracles::random_vector(7, 152);
  IasConfig cfg;
  cfg.eta = 0.02;
  const IasResult dense = ias_solve(a, b, cfg);
  const IasResult gram = ias_solve_gram(a.transpose() * a, a.transpose() * b,
                                        b.squaredNorm(), cfg);
  CHECK((dense.x - gram.x).cwiseAbs().maxCoeff() < 1e-10);
}
