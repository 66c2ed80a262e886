#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace bcs::io {

// Binary layout, all little-endian:
//   matrix: u64 magic, u64 rows, u64 cols, rows*cols f64 in row-major order
//   vector: u64 magic, u64 length, length f64
inline constexpr std::uint64_t kMagic = 0x42435331;

void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);

void write_vector(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(const std::string& path);

/// Binary matrix or vector file, dispatched on its header length.
/// Vectors come back as a single row.
Eigen::MatrixXd read_matrix_or_vector(const std::string& path);

/// Text signal: one real per line; blank lines and '#' comments ignored.
Eigen::VectorXd read_signal_text(const std::string& path);

/// Accepts either the binary vector format or the text format.
Eigen::VectorXd read_signal(const std::string& path);

void write_signal_text(const std::string& path, const Eigen::VectorXd& v);

}  // namespace bcs::io
