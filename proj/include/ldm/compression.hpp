#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ldm/dictionary.hpp"

namespace ldm {

enum class CompressionMethod { Pca, Nmf };

struct LowRankFactors {
  Eigen::MatrixXd w;                // n x k feature vectors (code book)
  Eigen::MatrixXd h;                // k x p_j coefficients
  Eigen::VectorXd singular_values;  // of the source block, descending, length min(n, p_j)
  CompressionMethod method = CompressionMethod::Pca;
  std::vector<double> residual_trace;  // NMF: Frobenius residual per outer iteration

  Eigen::Index rank() const { return w.cols(); }
};

/// Effective-rank rule: keep components while sigma_k/sigma_1 >= delta,
/// clamped to [1, k_max].
struct RankRule {
  int k_max = 50;
  double delta = 1e-3;
};

struct TruncatedSvd {
  Eigen::MatrixXd u;      // n x k, orthonormal columns
  Eigen::VectorXd sigma;  // k, descending nonnegative
  Eigen::MatrixXd v;      // p x k
};

/// Rank-k truncation of the SVD; U column signs canonicalized (largest-
/// magnitude entry positive).
TruncatedSvd truncated_svd(const Eigen::MatrixXd& block, Eigen::Index k);

/// All singular values, descending. Uses a Gram-matrix eigenvalue path for
/// strongly rectangular blocks where the full SVD would be wasteful.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& block);

int select_rank(const Eigen::VectorXd& sv, const RankRule& rule);

LowRankFactors pca_compress(const Eigen::MatrixXd& block, const RankRule& rule);

struct NmfOptions {
  bool nonneg_w = false;
  double eta_h = 1e-3;  // small: sparse expansions of the atoms
  double eta_w = 1.0;   // larger: feature vectors are not expected to be sparse
  int max_outer = 200;
  std::uint64_t seed = 0;
  // inner NNLS-IAS budget (artifact decisions; the paper leaves these open)
  double snr = 1e3;
  int inner_max_iters = 40;
  double inner_tol = 1e-6;
  double outer_tol = 1e-6;
};

// Alternating factorization D ~ WH with H >= 0 (and W >= 0 when requested),
// column/row updates computed by the projected IAS solver. Initialized from
// the entrywise absolute value of the truncated SVD.
LowRankFactors nmf(const Eigen::MatrixXd& block, Eigen::Index k, const NmfOptions& opts);

struct ClusterCompressionConfig {
  CompressionMethod method = CompressionMethod::Pca;
  RankRule rule;
  NmfOptions nmf;
};

/// One factor pair per partition block; configs has either one entry
/// (broadcast) or one per block.
std::vector<LowRankFactors> compress_partition(
    const Dictionary& d, const Partition& partition,
    const std::vector<ClusterCompressionConfig>& configs);

}  // namespace ldm
