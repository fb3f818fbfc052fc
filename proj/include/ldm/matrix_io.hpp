#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

namespace ldm {

enum class MatrixFormat { Csv, RawBinary };

/// Picks Csv for ".csv", RawBinary for ".bin"; anything else is an error.
MatrixFormat format_from_extension(const std::filesystem::path& path);

// CSV: one row per signal sample, one column per atom; a single header line is
// auto-detected and skipped. RawBinary: uint64 n, uint64 p, then n*p
// little-endian float64 values in column-major order.
Eigen::MatrixXd load_matrix(const std::filesystem::path& path, MatrixFormat format);
void save_matrix(const Eigen::MatrixXd& m, const std::filesystem::path& path,
                 MatrixFormat format);

/// Sidecar label file: single-column CSV of integer class ids.
std::vector<int> load_labels(const std::filesystem::path& path);
void save_labels(const std::vector<int>& labels, const std::filesystem::path& path);

}  // namespace ldm
