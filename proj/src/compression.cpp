#include "ldm/compression.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "ldm/errors.hpp"
#include "ldm/ias.hpp"
#include "ldm/parallel.hpp"

namespace ldm {

namespace {

struct ThinSvd {
  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd v;
};

// Full thin SVD with canonical U column signs.
ThinSvd thin_svd(const Eigen::MatrixXd& block) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Eigen::Index c = 0; c < out.u.cols(); ++c) {
    Eigen::Index imax = 0;
    out.u.col(c).cwiseAbs().maxCoeff(&imax);
    if (out.u(imax, c) < 0.0) {
      out.u.col(c) = -out.u.col(c);
      out.v.col(c) = -out.v.col(c);
    }
  }
  return out;
}

// 1/|a_j|^2 profile with the median pinned to snr^2; dead columns (possible
// mid-NMF) are clamped instead of rejected.
Eigen::VectorXd clamped_scales(const Eigen::MatrixXd& a, double snr) {
  Eigen::VectorXd nrm2(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) nrm2(j) = a.col(j).squaredNorm();
  const double top = nrm2.maxCoeff();
  if (top <= 0.0) return Eigen::VectorXd::Constant(a.cols(), snr * snr);
  Eigen::VectorXd v(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    v(j) = 1.0 / std::max(nrm2(j), 1e-12 * top);
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  const double median =
      sorted.size() % 2 == 1 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
  return v * (snr * snr / median);
}

}  // namespace

TruncatedSvd truncated_svd(const Eigen::MatrixXd& block, Eigen::Index k) {
  const Eigen::Index kmax = std::min(block.rows(), block.cols());
  if (k < 1 || k > kmax) throw ConfigError("truncated_svd: k out of range");
  ThinSvd svd = thin_svd(block);
  return TruncatedSvd{svd.u.leftCols(k), svd.sigma.head(k), svd.v.leftCols(k)};
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& block) {
  const Eigen::Index n = block.rows();
  const Eigen::Index p = block.cols();
  const Eigen::Index small = std::min(n, p);
  // Gram eigenvalues are cheaper and accurate enough for rank-rule ratios.
  if (small > 256 && std::max(n, p) >= 4 * small) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(small, small);
    if (n >= p)
      gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
    else
      gram.selfadjointView<Eigen::Lower>().rankUpdate(block);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        gram.selfadjointView<Eigen::Lower>(), Eigen::EigenvaluesOnly);
    Eigen::VectorXd sv = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::reverse(sv.data(), sv.data() + sv.size());
    return sv;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(block);
  return svd.singularValues();
}

int select_rank(const Eigen::VectorXd& sv, const RankRule& rule) {
  if (sv.size() == 0) throw ConfigError("select_rank: empty singular values");
  if (rule.k_max < 1 || !(rule.delta > 0.0) || !(rule.delta < 1.0))
    throw ConfigError("select_rank: invalid rank rule");
  if (!(sv(0) > 0.0)) throw ConfigError("select_rank: leading singular value is zero");

  int k = static_cast<int>(sv.size());
  for (Eigen::Index i = 1; i < sv.size(); ++i) {
    if (sv(i) / sv(0) < rule.delta) {
      k = static_cast<int>(i);  // retain components before the first violation
      break;
    }
  }
  return std::max(1, std::min(k, rule.k_max));
}

LowRankFactors pca_compress(const Eigen::MatrixXd& block, const RankRule& rule) {
  ThinSvd svd = thin_svd(block);
  const int k = select_rank(svd.sigma, rule);
  LowRankFactors f;
  f.w = svd.u.leftCols(k);
  f.h = svd.sigma.head(k).asDiagonal() * svd.v.leftCols(k).transpose();
  f.singular_values = svd.sigma;
  f.method = CompressionMethod::Pca;
  return f;
}

LowRankFactors nmf(const Eigen::MatrixXd& block, Eigen::Index k, const NmfOptions& opts) {
  const Eigen::Index n = block.rows();
  const Eigen::Index p = block.cols();
  if (k < 1 || k > std::min(n, p)) throw ConfigError("nmf: k out of range");
  if (opts.nonneg_w && block.minCoeff() < 0.0)
    throw ConfigError("nmf: negative entries with nonnegative W requested");
  if (opts.max_outer < 1) throw ConfigError("nmf: max_outer must be positive");

  ThinSvd svd = thin_svd(block);
  Eigen::MatrixXd w = svd.u.leftCols(k).cwiseAbs();
  Eigen::MatrixXd h =
      (svd.sigma.head(k).asDiagonal() * svd.v.leftCols(k).transpose()).cwiseAbs();
  const double wh_norm = (w * h).norm();
  if (wh_norm > 0.0) h *= block.norm() / wh_norm;

  LowRankFactors f;
  f.singular_values = svd.sigma;
  f.method = CompressionMethod::Nmf;

  const auto residual = [&](const Eigen::MatrixXd& wm, const Eigen::MatrixXd& hm) {
    return (block - wm * hm).norm();
  };
  double prev = residual(w, h);
  f.residual_trace.push_back(prev);

  IasConfig col_cfg;
  col_cfg.eta = opts.eta_h;
  col_cfg.nonneg = true;
  col_cfg.max_iters = opts.inner_max_iters;
  col_cfg.tol_x = opts.inner_tol;
  IasConfig row_cfg;
  row_cfg.eta = opts.eta_w;
  row_cfg.nonneg = opts.nonneg_w;
  row_cfg.max_iters = opts.inner_max_iters;
  row_cfg.tol_x = opts.inner_tol;

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    const Eigen::MatrixXd w_before = w;
    const Eigen::MatrixXd h_before = h;

    // H column-wise: expansion of each atom in the current feature vectors
    {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
      gram = gram.selfadjointView<Eigen::Lower>();
      const Eigen::MatrixXd atb = w.transpose() * block;
      IasConfig cfg = col_cfg;
      cfg.theta_scales = clamped_scales(w, opts.snr);
      parallel_for(p, [&](std::ptrdiff_t c) {
        h.col(c) =
            ias_solve_gram(gram, atb.col(c), block.col(c).squaredNorm(), cfg).x;
      });
    }

    // W row-wise via |D^T - H^T W^T|_F
    {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(h);
      gram = gram.selfadjointView<Eigen::Lower>();
      const Eigen::MatrixXd atb = h * block.transpose();  // k x n
      IasConfig cfg = row_cfg;
      cfg.theta_scales = clamped_scales(h.transpose(), opts.snr);
      parallel_for(n, [&](std::ptrdiff_t r) {
        w.row(r) = ias_solve_gram(gram, atb.col(r), block.row(r).squaredNorm(), cfg)
                       .x.transpose();
      });
    }

    const double res = residual(w, h);
    if (res > prev) {
      // regularized inner solves stopped paying off; keep the better iterate
      w = w_before;
      h = h_before;
      break;
    }
    f.residual_trace.push_back(res);
    const double drop = prev - res;
    prev = res;
    if (drop <= opts.outer_tol * std::max(prev, 1e-300)) break;
  }

  f.w = std::move(w);
  f.h = std::move(h);
  return f;
}

std::vector<LowRankFactors> compress_partition(
    const Dictionary& d, const Partition& partition,
    const std::vector<ClusterCompressionConfig>& configs) {
  partition.validate();
  if (partition.total() != d.size())
    throw ConfigError("compress_partition: partition does not match dictionary");
  const int K = partition.blocks();
  if (configs.empty() ||
      (configs.size() != 1 && static_cast<int>(configs.size()) != K))
    throw ConfigError("compress_partition: need one config or one per block");

  std::vector<LowRankFactors> out;
  out.reserve(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    const ClusterCompressionConfig& cfg =
        configs.size() == 1 ? configs[0] : configs[static_cast<std::size_t>(j)];
    const Eigen::MatrixXd block =
        d.atoms.middleCols(partition.begin(j), partition.block_size(j));
    if (cfg.method == CompressionMethod::Pca) {
      out.push_back(pca_compress(block, cfg.rule));
    } else {
      const Eigen::VectorXd sv = singular_values(block);
      out.push_back(nmf(block, select_rank(sv, cfg.rule), cfg.nmf));
    }
  }
  return out;
}

}  // namespace ldm
