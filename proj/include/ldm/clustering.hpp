#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ldm/dictionary.hpp"

namespace ldm {

enum class Metric { L1, L2 };

struct ClusteringConfig {
  int k = 1;
  Metric metric = Metric::L2;
  std::uint64_t seed = 0;
  int max_iters = 100;
};

/// Symmetric p x p matrix of pairwise column distances, zero diagonal.
Eigen::MatrixXd distance_matrix(const Dictionary& d, Metric metric);

struct KMedoidsResult {
  std::vector<int> labels;             // cluster id in {1..K} per column
  std::vector<Eigen::Index> medoids;   // medoid column per cluster, 0-based
  std::vector<double> objective_trace; // total distance after each iteration
  int iterations = 0;
};

// PAM-style alternation with k-medoids++ seeding. Seeding and cluster
// numbering operate on a canonical column ordering, so permuting the input
// columns permutes the labels identically.
KMedoidsResult k_medoids(const Dictionary& d, const ClusteringConfig& cfg);

}  // namespace ldm
