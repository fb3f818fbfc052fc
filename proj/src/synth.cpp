#include "ldm/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ldm/errors.hpp"
#include "ldm/rng.hpp"

namespace ldm {

SynthData make_clustered_dictionary(const SynthConfig& cfg) {
  if (cfg.clusters < 1 || cfg.atoms_per_cluster < 1 || cfg.signal_dim < 2)
    throw ConfigError("synth: invalid dictionary shape");
  if (cfg.max_atoms < 1 || cfg.max_atoms > cfg.clusters)
    throw ConfigError("synth: max_atoms must lie in [1, clusters]");

  const int K = cfg.clusters;
  const Eigen::Index n = cfg.signal_dim;
  const Eigen::Index p = static_cast<Eigen::Index>(K) * cfg.atoms_per_cluster;

  Eigen::VectorXd grid(n);
  for (Eigen::Index i = 0; i < n; ++i)
    grid(i) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);

  Eigen::MatrixXd atoms(n, p);
  std::vector<int> labels(static_cast<std::size_t>(p));
  Eigen::Index col = 0;
  for (int j = 0; j < K; ++j) {
    Rng stream = Rng::stream(cfg.seed, static_cast<std::uint64_t>(j) + 1);
    const double lo = (static_cast<double>(j) + 0.15) / K;
    const double hi = (static_cast<double>(j) + 0.85) / K;
    for (int a = 0; a < cfg.atoms_per_cluster; ++a, ++col) {
      const double center = stream.uniform(lo, hi);
      const double width = stream.log_uniform(cfg.width_lo, cfg.width_hi);
      Eigen::VectorXd atom =
          (-(grid.array() - center).square() / (2.0 * width * width)).exp();
      // sparse spikes, atom-specific positions
      for (Eigen::Index i = 0; i < n; ++i)
        if (stream.uniform() < cfg.texture_density)
          atom(i) += stream.uniform(cfg.texture_lo, cfg.texture_hi);
      atoms.col(col) = atom / atom.norm();
      labels[static_cast<std::size_t>(col)] = j + 1;
    }
  }

  SynthData data;
  data.dict = Dictionary::make(std::move(atoms), std::move(labels));
  data.test.resize(n, cfg.n_test);
  data.true_x = Eigen::MatrixXd::Zero(p, cfg.n_test);
  data.true_clusters.resize(static_cast<std::size_t>(cfg.n_test));

  for (int t = 0; t < cfg.n_test; ++t) {
    Rng stream = Rng::stream(cfg.seed, 0x5151u + static_cast<std::uint64_t>(t));
    const int count = 1 + stream.uniform_int(cfg.max_atoms);
    std::vector<int> order(static_cast<std::size_t>(K));
    std::iota(order.begin(), order.end(), 0);
    for (int i = K - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(stream.uniform_int(i + 1))]);
    order.resize(static_cast<std::size_t>(count));
    std::sort(order.begin(), order.end());

    for (int j : order) {
      const Eigen::Index base = static_cast<Eigen::Index>(j) * cfg.atoms_per_cluster;
      const Eigen::Index atom = base + stream.uniform_int(cfg.atoms_per_cluster);
      data.true_x(atom, t) = stream.uniform(cfg.coeff_lo, cfg.coeff_hi);
    }
    data.test.col(t) = data.dict.atoms * data.true_x.col(t);
    data.true_clusters[static_cast<std::size_t>(t)] = std::move(order);
  }
  return data;
}

ConeSynthData make_cone_clusters(const ConeSynthConfig& cfg) {
  if (cfg.clusters < 1 || cfg.train_per_cluster < 2 || cfg.test_per_cluster < 1)
    throw ConfigError("cone synth: invalid shape");
  if (cfg.latent_dim < 2 || cfg.latent_dim > cfg.signal_dim)
    throw ConfigError("cone synth: latent_dim must lie in [2, signal_dim]");

  const Eigen::Index n = cfg.signal_dim;
  const Eigen::Index d = cfg.latent_dim;
  const int K = cfg.clusters;

  // smooth orthonormal latent basis: sinusoids of increasing frequency
  Eigen::MatrixXd raw(n, d);
  for (Eigen::Index l = 0; l < d; ++l)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      raw(i, l) = l % 2 == 0 ? std::sin(M_PI * (l + 1) * t)
                             : std::cos(M_PI * (l + 1) * t);
    }
  const Eigen::MatrixXd basis =
      Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() *
      Eigen::MatrixXd::Identity(n, d);

  // one unit latent direction per cluster
  std::vector<Eigen::VectorXd> directions;
  for (int j = 0; j < K; ++j) {
    Rng stream = Rng::stream(cfg.seed, 0xd1eu + static_cast<std::uint64_t>(j));
    Eigen::VectorXd g(d);
    for (Eigen::Index l = 0; l < d; ++l) g(l) = stream.gaussian();
    directions.push_back(g / g.norm());
  }

  const auto draw_atom = [&](int j, Rng& stream) {
    const double amp = stream.uniform(cfg.amp_lo, cfg.amp_hi);
    Eigen::VectorXd z = amp * directions[static_cast<std::size_t>(j)];
    for (Eigen::Index l = 0; l < d; ++l)
      z(l) += cfg.spread * stream.gaussian() / std::sqrt(static_cast<double>(d));
    Eigen::VectorXd atom = basis * z;
    return Eigen::VectorXd(atom / atom.norm());
  };

  ConeSynthData data;
  Eigen::MatrixXd train(n, static_cast<Eigen::Index>(K) * cfg.train_per_cluster);
  std::vector<int> labels(static_cast<std::size_t>(train.cols()));
  data.test.resize(n, static_cast<Eigen::Index>(K) * cfg.test_per_cluster);
  data.test_class.resize(static_cast<std::size_t>(data.test.cols()));

  Eigen::Index tr = 0;
  Eigen::Index te = 0;
  for (int j = 0; j < K; ++j) {
    Rng stream = Rng::stream(cfg.seed, 0xa70e5u + static_cast<std::uint64_t>(j));
    for (int a = 0; a < cfg.train_per_cluster; ++a, ++tr) {
      train.col(tr) = draw_atom(j, stream);
      labels[static_cast<std::size_t>(tr)] = j + 1;
    }
    for (int a = 0; a < cfg.test_per_cluster; ++a, ++te) {
      data.test.col(te) = draw_atom(j, stream);
      data.test_class[static_cast<std::size_t>(te)] = j + 1;
    }
  }
  data.train = Dictionary::make(std::move(train), std::move(labels));
  return data;
}

}  // namespace ldm
