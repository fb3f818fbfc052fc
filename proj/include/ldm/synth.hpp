#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ldm/dictionary.hpp"

namespace ldm {

// Clustered nonnegative dictionary of Gaussian-bump atoms plus sparse
// nonnegative spike texture, with within-sample test mixtures and their
// ground truth. Cluster j's bump centers live in the j-th window of [0, 1];
// the spikes keep neighboring atoms distinguishable at the support level.
struct SynthConfig {
  int clusters = 4;
  int atoms_per_cluster = 200;
  int signal_dim = 96;
  int n_test = 500;
  int max_atoms = 3;  // atoms per test vector, each from a different cluster
  std::uint64_t seed = 1;
  double width_lo = 0.02, width_hi = 0.045;      // bump width range (t units)
  double texture_density = 0.12;                 // fraction of spiked entries
  double texture_lo = 0.5, texture_hi = 1.2;     // spike amplitude range
  double coeff_lo = 0.5, coeff_hi = 1.5;         // mixture coefficients
};

struct SynthData {
  Dictionary dict;                             // l2-normalized columns, labeled 1..K
  Eigen::MatrixXd test;                        // n x n_test, b = D x exactly
  Eigen::MatrixXd true_x;                      // p x n_test
  std::vector<std::vector<int>> true_clusters; // 0-based clusters per test vector
};

SynthData make_clustered_dictionary(const SynthConfig& cfg);

// Clusters sharing one smooth latent subspace but concentrated along distinct
// principal directions; half the draws are training atoms, half are held out
// as test data for subdictionary identification.
struct ConeSynthConfig {
  int clusters = 6;
  int train_per_cluster = 60;
  int test_per_cluster = 40;
  int signal_dim = 48;
  int latent_dim = 10;
  double spread = 0.2;               // within-cluster scatter off the main direction
  double amp_lo = 0.8, amp_hi = 1.2;
  std::uint64_t seed = 7;
};

struct ConeSynthData {
  Dictionary train;             // labeled 1..K
  Eigen::MatrixXd test;         // n x (K * test_per_cluster)
  std::vector<int> test_class;  // 1-based true cluster per test column
};

ConeSynthData make_cone_clusters(const ConeSynthConfig& cfg);

}  // namespace ldm
