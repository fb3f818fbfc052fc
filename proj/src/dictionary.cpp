#include "ldm/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ldm/errors.hpp"

namespace ldm {

Dictionary Dictionary::make(Eigen::MatrixXd atoms, std::vector<int> labels) {
  if (atoms.rows() < 1 || atoms.cols() < 1)
    throw ConfigError("dictionary must have at least one row and one column");
  for (Eigen::Index c = 0; c < atoms.cols(); ++c)
    for (Eigen::Index r = 0; r < atoms.rows(); ++r)
      if (!std::isfinite(atoms(r, c))) {
        std::ostringstream os;
        os << "non-finite dictionary entry at row " << (r + 1) << ", column " << (c + 1);
        throw ConfigError(os.str());
      }
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != atoms.cols())
    throw ConfigError("label count does not match atom count");
  return Dictionary{std::move(atoms), std::move(labels)};
}

Partition Partition::single_block(Eigen::Index p) { return Partition{{0, p}}; }

Partition Partition::from_sizes(const std::vector<Eigen::Index>& sizes) {
  Partition part;
  part.boundaries.resize(sizes.size() + 1);
  part.boundaries[0] = 0;
  for (std::size_t j = 0; j < sizes.size(); ++j)
    part.boundaries[j + 1] = part.boundaries[j] + sizes[j];
  part.validate();
  return part;
}

void Partition::validate() const {
  if (boundaries.size() < 2 || boundaries.front() != 0)
    throw ConfigError("partition must start at 0 and contain at least one block");
  for (std::size_t j = 1; j < boundaries.size(); ++j)
    if (boundaries[j] <= boundaries[j - 1])
      throw ConfigError("partition blocks must be non-empty and ascending");
}

PartitionedDictionary partition_by_labels(const Dictionary& d) {
  if (!d.has_labels()) throw ConfigError("partition_by_labels requires labels");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return d.labels[static_cast<std::size_t>(a)] < d.labels[static_cast<std::size_t>(b)];
  });

  Eigen::MatrixXd atoms(d.dim(), d.size());
  std::vector<int> labels(static_cast<std::size_t>(d.size()));
  for (Eigen::Index c = 0; c < d.size(); ++c) {
    atoms.col(c) = d.atoms.col(order[static_cast<std::size_t>(c)]);
    labels[static_cast<std::size_t>(c)] =
        d.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
  }

  Partition part;
  part.boundaries.push_back(0);
  for (Eigen::Index c = 1; c < d.size(); ++c)
    if (labels[static_cast<std::size_t>(c)] != labels[static_cast<std::size_t>(c - 1)])
      part.boundaries.push_back(c);
  part.boundaries.push_back(d.size());
  part.validate();

  return PartitionedDictionary{Dictionary{std::move(atoms), std::move(labels)},
                               std::move(part), std::move(order)};
}

}  // namespace ldm
