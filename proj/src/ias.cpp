#include "ldm/ias.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ldm/errors.hpp"

namespace ldm {

namespace {

constexpr double kThetaFloor = std::numeric_limits<double>::min();

void check_theta(const Eigen::VectorXd& theta) {
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (!(theta(j) > 0.0)) throw SolverError("ias: nonpositive theta");
}

Eigen::VectorXd resolve_scales(const IasConfig& cfg, Eigen::Index p) {
  if (cfg.theta_scales.size() == 0) return Eigen::VectorXd::Ones(p);
  if (cfg.theta_scales.size() != p)
    throw ConfigError("ias: theta_scales length does not match column count");
  for (Eigen::Index j = 0; j < p; ++j)
    if (!(cfg.theta_scales(j) > 0.0)) throw ConfigError("ias: theta_scales must be positive");
  return cfg.theta_scales;
}

// Primal form: x = D^{1/2}w with (D^{1/2} G D^{1/2} + I) w = D^{1/2} Atb.
Eigen::VectorXd solve_primal_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& atb,
                                  const Eigen::VectorXd& theta) {
  const Eigen::VectorXd s = theta.cwiseSqrt();
  Eigen::MatrixXd m = s.asDiagonal() * gram * s.asDiagonal();
  m.diagonal().array() += 1.0;
  const Eigen::VectorXd w = m.ldlt().solve((s.array() * atb.array()).matrix());
  return (s.array() * w.array()).matrix();
}

// Dual form: x = D A^T (A D A^T + I)^{-1} b; cheaper when p > n.
Eigen::VectorXd solve_dual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& theta) {
  const Eigen::VectorXd s = theta.cwiseSqrt();
  const Eigen::MatrixXd as = a * s.asDiagonal();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows(), a.rows());
  m.selfadjointView<Eigen::Lower>().rankUpdate(as);
  m.diagonal().array() += 1.0;
  const Eigen::VectorXd y =
      m.selfadjointView<Eigen::Lower>().ldlt().solve(b);
  return theta.asDiagonal() * (a.transpose() * y);
}

// CGLS on the damped system min |A D^{1/2} w - b|^2 + |w|^2. Early stopping:
// data residual below sqrt(n) (whitened units), else a 1e-10 relative cap on
// the normal-equation residual.
Eigen::VectorXd solve_cgls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& theta) {
  const Eigen::Index n = a.rows();
  const Eigen::Index p = a.cols();
  const Eigen::VectorXd scale = theta.cwiseSqrt();

  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = b;                         // data-part residual b - Ãw
  Eigen::VectorXd rw = Eigen::VectorXd::Zero(p); // regularizer residual -w
  Eigen::VectorXd g = scale.asDiagonal() * (a.transpose() * r);  // Ãᵀr - w
  double gamma = g.squaredNorm();
  const double gamma0 = gamma;
  Eigen::VectorXd d = g;

  const int max_iters = static_cast<int>(2 * (n + p)) + 10;
  const double discrepancy = std::sqrt(static_cast<double>(n));
  for (int it = 0; it < max_iters; ++it) {
    if (!std::isfinite(gamma)) throw SolverError("ias: inner CGLS diverged");
    if (gamma <= 1e-20 * std::max(gamma0, 1.0)) break;
    if (r.norm() <= discrepancy) break;
    if (gamma <= 1e-20 || std::sqrt(gamma / std::max(gamma0, 1e-300)) <= 1e-10) break;

    const Eigen::VectorXd ad = a * (scale.asDiagonal() * d);
    const double denom = ad.squaredNorm() + d.squaredNorm();
    if (denom <= 0.0) break;
    const double alpha = gamma / denom;
    w += alpha * d;
    r -= alpha * ad;
    rw -= alpha * d;
    g = scale.asDiagonal() * (a.transpose() * r) + rw;
    const double gamma_new = g.squaredNorm();
    d = g + (gamma_new / gamma) * d;
    gamma = gamma_new;
  }
  if (!w.allFinite()) throw SolverError("ias: inner CGLS produced non-finite iterate");
  return (scale.array() * w.array()).matrix();
}

struct GramProblem {
  const Eigen::MatrixXd& gram;
  const Eigen::VectorXd& atb;
  double b_norm2;
};

double misfit_from_gram(const GramProblem& prob, const Eigen::VectorXd& x) {
  const double q = x.dot(prob.gram.selfadjointView<Eigen::Lower>() * x);
  return std::max(0.0, prob.b_norm2 - 2.0 * x.dot(prob.atb) + q);
}

double energy_terms(const Eigen::VectorXd& x, const Eigen::VectorXd& theta, double eta,
                    const Eigen::VectorXd& vartheta) {
  double value = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) != 0.0) value += 0.5 * x(j) * x(j) / theta(j);
    if (eta > 0.0) value -= eta * std::log(theta(j));
    value += theta(j) / vartheta(j);
  }
  return value;
}

IasResult run_iteration(
    Eigen::Index p, const IasConfig& cfg, const Eigen::VectorXd& vartheta,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& x_step,
    const std::function<double(const Eigen::VectorXd&)>& misfit) {
  IasResult res;
  res.theta = vartheta;
  res.x = Eigen::VectorXd::Zero(p);

  for (int it = 0; it < cfg.max_iters; ++it) {
    Eigen::VectorXd x_new = x_step(res.theta);
    if (!x_new.allFinite()) throw SolverError("ias: x-update produced non-finite values");
    if (cfg.nonneg) x_new = project_nonnegative(std::move(x_new));
    for (Eigen::Index j = 0; j < p; ++j)
      res.theta(j) = theta_update(x_new(j), cfg.eta, vartheta(j));

    res.energy_trace.push_back(0.5 * misfit(x_new) +
                               energy_terms(x_new, res.theta, cfg.eta, vartheta));
    res.iterations = it + 1;
    const double change = (x_new - res.x).norm();
    res.x = std::move(x_new);
    if (change <= cfg.tol_x * std::max(res.x.norm(), kThetaFloor)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace

double gibbs_energy(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                    const IasConfig& cfg) {
  check_theta(theta);
  const Eigen::VectorXd vartheta = resolve_scales(cfg, x.size());
  if (cfg.eta < 0.0) throw ConfigError("ias: eta must be nonnegative");
  return 0.5 * (b - a * x).squaredNorm() + energy_terms(x, theta, cfg.eta, vartheta);
}

double theta_update(double x_j, double eta, double vartheta_j) {
  // stationary point of the Gibbs energy in theta_j
  const double value =
      vartheta_j * (0.5 * eta + std::sqrt(0.25 * eta * eta +
                                          x_j * x_j / (2.0 * vartheta_j)));
  return std::max(value, kThetaFloor);
}

Eigen::VectorXd x_update(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& theta, InnerSolver inner) {
  check_theta(theta);
  if (a.rows() != b.size()) throw ConfigError("ias: dimension mismatch in x_update");
  if (a.cols() != theta.size()) throw ConfigError("ias: theta length mismatch");
  if (inner == InnerSolver::IterativeEarlyStop) return solve_cgls(a, b, theta);
  if (a.cols() <= a.rows()) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(a.cols(), a.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    return solve_primal_gram(gram, a.transpose() * b, theta);
  }
  return solve_dual(a, b, theta);
}

Eigen::VectorXd project_nonnegative(Eigen::VectorXd x) {
  return x.cwiseMax(0.0);
}

Eigen::VectorXd sensitivity_scales(const Eigen::MatrixXd& a, double target_snr) {
  if (!(target_snr > 0.0)) throw ConfigError("sensitivity_scales: target_snr must be > 0");
  Eigen::VectorXd v(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double nrm2 = a.col(j).squaredNorm();
    if (nrm2 <= 0.0) throw ConfigError("sensitivity_scales: zero column");
    v(j) = 1.0 / nrm2;
  }
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  const double median = sorted.size() % 2 == 1
                            ? sorted[h]
                            : 0.5 * (sorted[h - 1] + sorted[h]);
  return v * (target_snr * target_snr / median);
}

IasResult ias_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const IasConfig& cfg) {
  if (a.rows() != b.size()) throw ConfigError("ias: dimension mismatch");
  if (cfg.eta < 0.0) throw ConfigError("ias: eta must be nonnegative");
  if (cfg.max_iters < 1) throw ConfigError("ias: max_iters must be positive");
  const Eigen::VectorXd vartheta = resolve_scales(cfg, a.cols());

  if (cfg.inner == InnerSolver::Direct && a.cols() <= a.rows()) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(a.cols(), a.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    const Eigen::VectorXd atb = a.transpose() * b;
    const GramProblem prob{gram, atb, b.squaredNorm()};
    return run_iteration(
        a.cols(), cfg, vartheta,
        [&](const Eigen::VectorXd& theta) { return solve_primal_gram(gram, atb, theta); },
        [&](const Eigen::VectorXd& x) { return misfit_from_gram(prob, x); });
  }

  return run_iteration(
      a.cols(), cfg, vartheta,
      [&](const Eigen::VectorXd& theta) {
        return cfg.inner == InnerSolver::IterativeEarlyStop ? solve_cgls(a, b, theta)
                                                            : solve_dual(a, b, theta);
      },
      [&](const Eigen::VectorXd& x) { return (b - a * x).squaredNorm(); });
}

IasResult ias_solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& atb,
                         double b_norm2, const IasConfig& cfg) {
  if (gram.rows() != gram.cols() || gram.rows() != atb.size())
    throw ConfigError("ias: gram dimensions mismatch");
  if (cfg.eta < 0.0) throw ConfigError("ias: eta must be nonnegative");
  const Eigen::VectorXd vartheta = resolve_scales(cfg, atb.size());
  const GramProblem prob{gram, atb, b_norm2};
  return run_iteration(
      atb.size(), cfg, vartheta,
      [&](const Eigen::VectorXd& theta) { return solve_primal_gram(gram, atb, theta); },
      [&](const Eigen::VectorXd& x) { return misfit_from_gram(prob, x); });
}

}  // namespace ldm
