#include "ldm/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "ldm/errors.hpp"
#include "ldm/parallel.hpp"
#include "ldm/rng.hpp"

namespace ldm {

Eigen::MatrixXd distance_matrix(const Dictionary& d, Metric metric) {
  const Eigen::Index p = d.size();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(p, p);
  parallel_for(p, [&](std::ptrdiff_t i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = metric == Metric::L2
                           ? (d.atoms.col(i) - d.atoms.col(j)).norm()
                           : (d.atoms.col(i) - d.atoms.col(j)).lpNorm<1>();
      dist(i, j) = v;
    }
  });
  // fill the upper triangle from the computed lower triangle
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j) dist(i, j) = dist(j, i);
  return dist;
}

namespace {

// Lexicographic column order; gives a permutation-invariant reference frame.
std::vector<Eigen::Index> canonical_order(const Eigen::MatrixXd& atoms) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(atoms.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index r = 0; r < atoms.rows(); ++r) {
      if (atoms(r, a) != atoms(r, b)) return atoms(r, a) < atoms(r, b);
    }
    return a < b;  // duplicates: fall back to original index
  });
  return order;
}

// k-medoids++ seeding over columns listed in canonical order.
std::vector<Eigen::Index> seed_medoids(const Eigen::MatrixXd& dist,
                                       const std::vector<Eigen::Index>& canon, int k,
                                       Rng& rng) {
  const auto p = static_cast<Eigen::Index>(canon.size());
  std::vector<Eigen::Index> medoids;
  medoids.reserve(static_cast<std::size_t>(k));
  std::vector<char> chosen(static_cast<std::size_t>(p), 0);

  const Eigen::Index first = canon[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(p)))];
  medoids.push_back(first);
  chosen[static_cast<std::size_t>(first)] = 1;

  Eigen::VectorXd best = Eigen::VectorXd::Zero(p);
  for (Eigen::Index c = 0; c < p; ++c) best(c) = dist(c, first);

  while (static_cast<int>(medoids.size()) < k) {
    double total = 0.0;
    for (Eigen::Index rank = 0; rank < p; ++rank) {
      const Eigen::Index c = canon[static_cast<std::size_t>(rank)];
      if (!chosen[static_cast<std::size_t>(c)]) total += best(c) * best(c);
    }
    Eigen::Index next = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index rank = 0; rank < p; ++rank) {
        const Eigen::Index c = canon[static_cast<std::size_t>(rank)];
        if (chosen[static_cast<std::size_t>(c)]) continue;
        acc += best(c) * best(c);
        if (acc >= target) {
          next = c;
          break;
        }
      }
    }
    if (next < 0) {
      // all remaining columns duplicate a medoid; take the first unchosen
      for (Eigen::Index rank = 0; rank < p; ++rank) {
        const Eigen::Index c = canon[static_cast<std::size_t>(rank)];
        if (!chosen[static_cast<std::size_t>(c)]) {
          next = c;
          break;
        }
      }
    }
    medoids.push_back(next);
    chosen[static_cast<std::size_t>(next)] = 1;
    for (Eigen::Index c = 0; c < p; ++c) best(c) = std::min(best(c), dist(c, next));
  }
  return medoids;
}

}  // namespace

KMedoidsResult k_medoids(const Dictionary& d, const ClusteringConfig& cfg) {
  const Eigen::Index p = d.size();
  if (cfg.k < 1 || static_cast<Eigen::Index>(cfg.k) > p)
    throw ConfigError("k_medoids: cluster count must be in [1, p]");
  if (cfg.max_iters < 1) throw ConfigError("k_medoids: max_iters must be positive");

  const Eigen::MatrixXd dist = distance_matrix(d, cfg.metric);
  const std::vector<Eigen::Index> canon = canonical_order(d.atoms);
  std::vector<Eigen::Index> canon_rank(static_cast<std::size_t>(p));
  for (Eigen::Index r = 0; r < p; ++r)
    canon_rank[static_cast<std::size_t>(canon[static_cast<std::size_t>(r)])] = r;

  Rng rng(cfg.seed);
  std::vector<Eigen::Index> medoids = seed_medoids(dist, canon, cfg.k, rng);

  std::vector<int> assign(static_cast<std::size_t>(p), 0);
  std::vector<char> is_medoid(static_cast<std::size_t>(p), 0);
  KMedoidsResult result;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    std::fill(is_medoid.begin(), is_medoid.end(), 0);
    for (Eigen::Index m : medoids) is_medoid[static_cast<std::size_t>(m)] = 1;

    // assignment: nearest medoid, ties toward the lowest medoid column index
    double cost = 0.0;
    for (Eigen::Index c = 0; c < p; ++c) {
      if (is_medoid[static_cast<std::size_t>(c)]) {
        // a medoid always belongs to its own cluster
        for (std::size_t m = 0; m < medoids.size(); ++m)
          if (medoids[m] == c) assign[static_cast<std::size_t>(c)] = static_cast<int>(m);
        continue;
      }
      int best_m = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < medoids.size(); ++m) {
        const double v = dist(c, medoids[m]);
        if (v < best_d || (v == best_d && medoids[m] < medoids[static_cast<std::size_t>(best_m)])) {
          best_d = v;
          best_m = static_cast<int>(m);
        }
      }
      assign[static_cast<std::size_t>(c)] = best_m;
      cost += best_d;
    }
    result.objective_trace.push_back(cost);
    result.iterations = iter + 1;

    // medoid update: per cluster, the column minimizing the within-cluster sum
    bool changed = false;
    for (std::size_t m = 0; m < medoids.size(); ++m) {
      Eigen::Index best_c = medoids[m];
      double best_sum = std::numeric_limits<double>::infinity();
      for (Eigen::Index cand = 0; cand < p; ++cand) {
        if (assign[static_cast<std::size_t>(cand)] != static_cast<int>(m)) continue;
        double sum = 0.0;
        for (Eigen::Index c = 0; c < p; ++c)
          if (assign[static_cast<std::size_t>(c)] == static_cast<int>(m)) sum += dist(c, cand);
        if (sum < best_sum || (sum == best_sum && cand < best_c)) {
          best_sum = sum;
          best_c = cand;
        }
      }
      if (best_c != medoids[m]) {
        medoids[m] = best_c;
        changed = true;
      }
    }
    if (!changed) break;
  }

  // number clusters 1..K by ascending canonical rank of their medoids
  std::vector<std::size_t> cluster_order(medoids.size());
  std::iota(cluster_order.begin(), cluster_order.end(), std::size_t{0});
  std::sort(cluster_order.begin(), cluster_order.end(), [&](std::size_t a, std::size_t b) {
    return canon_rank[static_cast<std::size_t>(medoids[a])] <
           canon_rank[static_cast<std::size_t>(medoids[b])];
  });
  std::vector<int> renumber(medoids.size());
  for (std::size_t r = 0; r < cluster_order.size(); ++r)
    renumber[cluster_order[r]] = static_cast<int>(r) + 1;

  result.labels.resize(static_cast<std::size_t>(p));
  for (Eigen::Index c = 0; c < p; ++c)
    result.labels[static_cast<std::size_t>(c)] = renumber[static_cast<std::size_t>(
        assign[static_cast<std::size_t>(c)])];
  result.medoids.resize(medoids.size());
  for (std::size_t r = 0; r < cluster_order.size(); ++r)
    result.medoids[r] = medoids[cluster_order[r]];
  return result;
}

}  // namespace ldm
