#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <vector>

#include "ldm/clustering.hpp"
#include "ldm/compression.hpp"
#include "ldm/dce.hpp"
#include "ldm/dictionary.hpp"
#include "ldm/group_sparsity.hpp"
#include "ldm/ias.hpp"
#include "ldm/metrics.hpp"

namespace ldm {

struct LibraryConfig {
  // used when the dictionary carries no labels
  std::optional<ClusteringConfig> clustering;
  // one entry (broadcast) or one per cluster
  std::vector<ClusterCompressionConfig> compression{ClusterCompressionConfig{}};
  double dce_epsilon = 0.0;  // 0: per-fit default rule
  double prior_epsilon = 1e-6;
};

// Built library: reordered dictionary, per-cluster factors, structural priors,
// per-cluster and combined DCE models. Immutable once built; match/classify
// calls may run concurrently against it.
struct CompressedLibrary {
  Dictionary dict;
  Partition partition;
  std::vector<Eigen::Index> permutation;
  std::vector<LowRankFactors> factors;
  std::vector<StructuralPrior> priors;
  std::vector<DceModel> cluster_dce;
  DceModel combined_dce;
  LibraryConfig config;

  int clusters() const { return partition.blocks(); }
  Eigen::MatrixXd block(int j) const {
    return dict.atoms.middleCols(partition.begin(j), partition.block_size(j));
  }
  std::vector<Eigen::MatrixXd> w_blocks() const;
};

CompressedLibrary build_library(const Dictionary& d, const LibraryConfig& cfg);

// Bundle = directory with manifest.json plus raw-binary matrices. Structural
// priors and DCE models are deterministic functions of the stored factors and
// are rebuilt on load, so a round trip reproduces match results bit-exactly.
void save_library(const CompressedLibrary& lib, const std::filesystem::path& dir);
CompressedLibrary load_library(const std::filesystem::path& dir);

enum class RelevanceRule { ThetaRatio, Trace };

struct IdentifyConfig {
  GsConfig gs;
  RelevanceRule rule = RelevanceRule::ThetaRatio;
  double theta_star = 0.3;
  bool sensitivity_vartheta = false;  // scale vartheta by block operator norms
  double snr = 1.0;
};

struct IdentifyResult {
  std::vector<int> selected;  // 0-based cluster indices, ascending; may be empty
  Eigen::VectorXd theta;
  GsResult gs;
};

IdentifyResult identify_clusters(const CompressedLibrary& lib, const Eigen::VectorXd& b,
                                 const IdentifyConfig& cfg);

struct DeflatedConfig {
  double eta = 1e-9;  // strong sparsification for the final coding
  double snr = 10.0;
  bool nonneg = true;
  int max_iters = 300;
  double tol_x = 1e-10;
  InnerSolver inner = InnerSolver::Direct;
  double dce_epsilon = 0.0;
};

struct MatchResult {
  bool empty = false;          // no cluster passed the relevance rule
  std::vector<int> selected;
  Eigen::VectorXd x_hat;       // length p, exactly zero outside selected clusters
  double residual_norm = 0.0;
  double relative_error = 0.0;  // |b - D x_hat| / |b|
  Eigen::VectorXd theta;        // per-cluster relevance variances (when identified)
  int identify_iterations = 0;
  int solve_iterations = 0;
  std::vector<double> solve_energy;
};

/// DCE is refit on the union of the selected clusters' residual columns.
MatchResult deflated_solve(const CompressedLibrary& lib, const std::vector<int>& selected,
                           const Eigen::VectorXd& b, const DeflatedConfig& cfg);

/// identify_clusters then deflated_solve; empty selections are reported, not
/// silently widened to the full dictionary.
MatchResult match(const CompressedLibrary& lib, const Eigen::VectorXd& b,
                  const IdentifyConfig& icfg, const DeflatedConfig& dcfg);

struct ClassifyConfig {
  double eta = 1e-3;
  double snr = 30.0;
  int max_iters = 100;
  double tol_x = 1e-7;
  bool use_dce = true;  // false: plain white-noise scaling only
  SsimParams ssim;
};

// Per-class whitened systems precomputed once; classify() is then cheap and
// reentrant, so batch runners can parallelize over data vectors.
class Classifier {
 public:
  Classifier(const CompressedLibrary& lib, double noise_std, const ClassifyConfig& cfg);

  struct Outcome {
    int label = 0;                 // 1-based class, ties to the lowest index
    Eigen::VectorXd dssim_values;  // one per class
  };
  Outcome classify(const Eigen::VectorXd& b) const;

 private:
  const CompressedLibrary& lib_;
  ClassifyConfig cfg_;
  double noise_var_ = 0.0;
  double noise_std_ = 0.0;
  struct PerClass {
    Eigen::MatrixXd a_white;
    Eigen::MatrixXd gram;
    Eigen::VectorXd vartheta;
  };
  std::vector<PerClass> classes_;
};

/// One-shot convenience wrapper around Classifier.
Classifier::Outcome classify_dssim(const CompressedLibrary& lib, const Eigen::VectorXd& b,
                                   double noise_std, const ClassifyConfig& cfg = {});

}  // namespace ldm
