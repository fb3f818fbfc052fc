#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace ldm {

// Column-major collection of atoms. Immutable after construction; safe to
// share read-only across workers.
struct Dictionary {
  Eigen::MatrixXd atoms;    // n x p
  std::vector<int> labels;  // empty, or one class id per column

  Eigen::Index dim() const { return atoms.rows(); }
  Eigen::Index size() const { return atoms.cols(); }
  bool has_labels() const { return !labels.empty(); }

  /// Validates dimensions, finiteness, and label count; throws on violation.
  static Dictionary make(Eigen::MatrixXd atoms, std::vector<int> labels = {});
};

/// Contiguous block partition of the columns: boundaries[0]=0 .. boundaries[K]=p.
struct Partition {
  std::vector<Eigen::Index> boundaries;

  int blocks() const { return static_cast<int>(boundaries.size()) - 1; }
  Eigen::Index begin(int j) const { return boundaries[static_cast<std::size_t>(j)]; }
  Eigen::Index end(int j) const { return boundaries[static_cast<std::size_t>(j) + 1]; }
  Eigen::Index block_size(int j) const { return end(j) - begin(j); }
  Eigen::Index total() const { return boundaries.back(); }

  static Partition single_block(Eigen::Index p);
  static Partition from_sizes(const std::vector<Eigen::Index>& sizes);
  void validate() const;
};

struct LabeledVector {
  Eigen::VectorXd values;
  std::optional<Eigen::VectorXd> true_coefficients;
  std::optional<int> true_class;
};

struct PartitionedDictionary {
  Dictionary dict;      // columns stably reordered, labels contiguous ascending
  Partition partition;  // boundaries matching the label runs
  std::vector<Eigen::Index> permutation;  // permutation[new] = old column (0-based)
};

// Stable reorder so equal labels occupy contiguous ranges in ascending label
// order. Idempotent; throws if labels are missing.
PartitionedDictionary partition_by_labels(const Dictionary& d);

}  // namespace ldm
