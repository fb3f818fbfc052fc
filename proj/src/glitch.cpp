#include "ldm/glitch.hpp"

#include <cmath>

#include "ldm/errors.hpp"
#include "ldm/parallel.hpp"

namespace ldm {

Eigen::Index SamplingGrid::samples() const {
  const double count = fs * duration;
  const double rounded = std::round(count);
  if (!(rounded >= 1.0) || std::abs(count - rounded) > 1e-9)
    throw ConfigError("sampling grid: fs * duration must be a positive integer");
  return static_cast<Eigen::Index>(rounded);
}

namespace {

void validate_spec(const GlitchSpec& spec, const SamplingGrid& grid) {
  if (!(spec.tau > 0.0)) throw ConfigError("glitch spec: tau must be positive");
  if (spec.t0 < 0.0 || spec.t0 > grid.duration)
    throw ConfigError("glitch spec: t0 outside the observation window");
  if (spec.cls != GlitchClass::Gauss) {
    if (spec.f0 < 40.0 || spec.f0 > 1500.0)
      throw ConfigError("glitch spec: f0 outside [40, 1500] Hz");
  }
  if (!std::isfinite(spec.h0)) throw ConfigError("glitch spec: non-finite amplitude");
}

}  // namespace

Eigen::VectorXd glitch_waveform(const GlitchSpec& spec, const SamplingGrid& grid) {
  validate_spec(spec, grid);
  const Eigen::Index n = grid.samples();
  Eigen::VectorXd wave(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / grid.fs;
    const double dt = t - spec.t0;
    double v = 0.0;
    switch (spec.cls) {
      case GlitchClass::SineGaussian:
        v = spec.h0 * std::sin(2.0 * M_PI * spec.f0 * dt) *
            std::exp(-dt * dt / (2.0 * spec.tau * spec.tau));
        break;
      case GlitchClass::Gauss:
        v = spec.h0 * std::exp(-dt * dt / (2.0 * spec.tau * spec.tau));
        break;
      case GlitchClass::RingDown:
        v = dt >= 0.0 ? spec.h0 * std::sin(2.0 * M_PI * spec.f0 * dt) *
                            std::exp(-dt / spec.tau)
                      : 0.0;
        break;
    }
    wave(i) = v;
  }
  return wave;
}

GlitchSpec sample_glitch_params(GlitchClass cls, Rng& rng) {
  GlitchSpec spec;
  spec.cls = cls;
  spec.h0 = 1.0;
  spec.t0 = 0.5;
  if (cls == GlitchClass::Gauss) {
    spec.tau = rng.log_uniform(0.001, 0.01);
  } else {
    spec.f0 = rng.log_uniform(40.0, 1500.0);
    spec.q = rng.log_uniform(2.0, 20.0);
    spec.tau = spec.q / (std::sqrt(2.0) * M_PI * spec.f0);
  }
  return spec;
}

Dictionary generate_glitch_dictionary(int n_per_class, const SamplingGrid& grid,
                                      std::uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("glitch dictionary: n_per_class must be >= 1");
  const Eigen::Index n = grid.samples();
  Eigen::MatrixXd atoms(n, 3 * static_cast<Eigen::Index>(n_per_class));
  std::vector<int> labels(static_cast<std::size_t>(3 * n_per_class));

  const GlitchClass order[3] = {GlitchClass::SineGaussian, GlitchClass::Gauss,
                                GlitchClass::RingDown};
  Eigen::Index col = 0;
  for (const GlitchClass cls : order) {
    Rng stream = Rng::stream(seed, static_cast<std::uint64_t>(cls));
    for (int i = 0; i < n_per_class; ++i, ++col) {
      const GlitchSpec spec = sample_glitch_params(cls, stream);
      Eigen::VectorXd wave = glitch_waveform(spec, grid);
      wave /= wave.cwiseAbs().maxCoeff();
      atoms.col(col) = wave;
      labels[static_cast<std::size_t>(col)] = static_cast<int>(cls);
    }
  }
  return Dictionary::make(std::move(atoms), std::move(labels));
}

Eigen::VectorXd add_noise_and_normalize(const Eigen::VectorXd& signal, double sigma_rel,
                                        Rng& rng) {
  if (sigma_rel < 0.0) throw ConfigError("add_noise: sigma must be nonnegative");
  Eigen::VectorXd noisy = signal;
  if (sigma_rel > 0.0)
    for (Eigen::Index i = 0; i < noisy.size(); ++i)
      noisy(i) += sigma_rel * rng.gaussian();
  const double peak = noisy.cwiseAbs().maxCoeff();
  if (peak > 0.0) noisy /= peak;
  return noisy;
}

NmfOptions GlitchBenchConfig::bench_nmf_defaults() {
  NmfOptions opts;
  opts.max_outer = 6;
  opts.inner_max_iters = 12;
  opts.inner_tol = 1e-5;
  opts.outer_tol = 1e-4;
  return opts;
}

CompressedLibrary build_glitch_library(const GlitchBenchConfig& cfg) {
  const Dictionary dict =
      generate_glitch_dictionary(cfg.n_train_per_class, cfg.grid, cfg.seed);

  LibraryConfig lc;
  lc.dce_epsilon = cfg.dce_epsilon;
  lc.prior_epsilon = cfg.prior_epsilon;
  lc.compression.clear();
  for (const GlitchClass cls : {GlitchClass::SineGaussian, GlitchClass::Gauss,
                                GlitchClass::RingDown}) {
    ClusterCompressionConfig cc;
    cc.method = CompressionMethod::Nmf;
    cc.rule = cfg.rule;
    cc.nmf = cfg.nmf;
    cc.nmf.nonneg_w = cls == GlitchClass::Gauss;  // mixed-sign SG/RD keep W free
    lc.compression.push_back(cc);
  }
  return build_library(dict, lc);
}

GlitchBenchResult run_glitch_classification(const CompressedLibrary& lib,
                                            const GlitchBenchConfig& cfg) {
  if (cfg.n_test < 1) throw ConfigError("glitch bench: n_test must be >= 1");
  ClassifyConfig ccfg = cfg.classify;
  ccfg.use_dce = cfg.use_dce;
  const double sigma_tilde = cfg.sigma_factor * cfg.sigma_rel;
  const Classifier classifier(lib, sigma_tilde, ccfg);

  GlitchBenchResult res;
  res.true_labels.assign(static_cast<std::size_t>(cfg.n_test), 0);
  res.pred_labels.assign(static_cast<std::size_t>(cfg.n_test), 0);

  parallel_for(cfg.n_test, [&](std::ptrdiff_t i) {
    Rng stream = Rng::stream(cfg.seed, 0x7e57u + static_cast<std::uint64_t>(i));
    const int cls = stream.uniform_int(3) + 1;
    const GlitchSpec spec = sample_glitch_params(static_cast<GlitchClass>(cls), stream);
    Eigen::VectorXd wave = glitch_waveform(spec, cfg.grid);
    wave /= wave.cwiseAbs().maxCoeff();
    const Eigen::VectorXd b = add_noise_and_normalize(wave, cfg.sigma_rel, stream);
    const auto outcome = classifier.classify(b);
    res.true_labels[static_cast<std::size_t>(i)] = cls;
    res.pred_labels[static_cast<std::size_t>(i)] = outcome.label;
  });

  res.confusion = confusion_matrix(res.true_labels, res.pred_labels, 3);
  res.accuracy =
      static_cast<double>(res.confusion.diagonal().sum()) / static_cast<double>(cfg.n_test);
  for (int c = 0; c < 3; ++c) {
    const int total = res.confusion.col(c).sum();
    res.per_class_accuracy(c) =
        total > 0 ? static_cast<double>(res.confusion(c, c)) / total : 0.0;
  }
  for (const auto& f : lib.factors) res.ranks.push_back(static_cast<int>(f.rank()));
  return res;
}

GlitchBenchResult run_glitch_experiment(const GlitchBenchConfig& cfg) {
  const CompressedLibrary lib = build_glitch_library(cfg);
  return run_glitch_classification(lib, cfg);
}

}  // namespace ldm
