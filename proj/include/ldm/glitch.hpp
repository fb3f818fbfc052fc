#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ldm/pipeline.hpp"
#include "ldm/rng.hpp"

namespace ldm {

enum class GlitchClass { SineGaussian = 1, Gauss = 2, RingDown = 3 };

struct GlitchSpec {
  GlitchClass cls = GlitchClass::Gauss;
  double h0 = 1.0;   // amplitude before max-abs normalization
  double f0 = 0.0;   // Hz, SG and RD only, in [40, 1500]
  double q = 0.0;    // quality factor, SG and RD only, in [2, 20]
  double tau = 0.0;  // characteristic time, seconds
  double t0 = 0.5;   // center time, seconds
};

struct SamplingGrid {
  double fs = 16384.0;  // samples per second
  double duration = 1.0;
  Eigen::Index samples() const;
};

// Sampled at t_i = i/fs:
//   SG: h0 sin(2 pi f0 (t - t0)) exp(-(t - t0)^2 / 2 tau^2)
//   G:  h0 exp(-(t - t0)^2 / 2 tau^2)
//   RD: h0 sin(2 pi f0 (t - t0)) exp(-(t - t0)/tau) for t >= t0, else 0
Eigen::VectorXd glitch_waveform(const GlitchSpec& spec, const SamplingGrid& grid);

// SG/RD: f0 log-uniform on [40, 1500] Hz, Q log-uniform on [2, 20],
// tau = Q / (sqrt(2) pi f0). G: tau log-uniform on [0.001, 0.01] s.
// t0 = 0.5 s, h0 = 1.
GlitchSpec sample_glitch_params(GlitchClass cls, Rng& rng);

/// 3 * n_per_class atoms, each normalized to unit max-abs; labels SG=1, G=2,
/// RD=3. One RNG stream per class.
Dictionary generate_glitch_dictionary(int n_per_class, const SamplingGrid& grid,
                                      std::uint64_t seed);

/// Adds iid N(0, sigma_rel^2) noise, then rescales to unit max-abs.
Eigen::VectorXd add_noise_and_normalize(const Eigen::VectorXd& signal, double sigma_rel,
                                        Rng& rng);

struct GlitchBenchConfig {
  int n_train_per_class = 100;
  int n_test = 600;
  double sigma_rel = 0.05;    // test noise std relative to h0
  double sigma_factor = 1.05; // the classifier overestimates the noise slightly
  RankRule rule{50, 1e-3};
  std::uint64_t seed = 1;
  bool use_dce = true;
  SamplingGrid grid;
  double dce_epsilon = 0.0;
  double prior_epsilon = 1e-6;
  NmfOptions nmf = bench_nmf_defaults();
  ClassifyConfig classify;

  static NmfOptions bench_nmf_defaults();
};

struct GlitchBenchResult {
  Eigen::MatrixXi confusion;  // rows: predicted, columns: true
  double accuracy = 0.0;
  Eigen::Vector3d per_class_accuracy;
  std::vector<int> ranks;
  std::vector<int> true_labels;
  std::vector<int> pred_labels;
};

/// Library from the labeled glitch dictionary: per-class semi-NMF with
/// nonnegative H; nonnegative W only for the Gaussian class.
CompressedLibrary build_glitch_library(const GlitchBenchConfig& cfg);

GlitchBenchResult run_glitch_classification(const CompressedLibrary& lib,
                                            const GlitchBenchConfig& cfg);

GlitchBenchResult run_glitch_experiment(const GlitchBenchConfig& cfg);

}  // namespace ldm
