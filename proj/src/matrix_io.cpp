#include "bcs/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "bcs/error.hpp"

namespace bcs::io {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return out;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  v = to_le(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint64_t get_u64(const std::vector<unsigned char>& bytes, std::size_t word) {
  std::uint64_t v = 0;
  std::memcpy(&v, bytes.data() + 8 * word, 8);
  return to_le(v);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

bool has_binary_magic(const std::vector<unsigned char>& bytes) {
  return bytes.size() >= 16 && get_u64(bytes, 0) == kMagic;
}

Eigen::MatrixXd decode(const std::vector<unsigned char>& bytes, const std::string& path,
                       int header_words) {
  const std::size_t words = bytes.size() / 8;
  if (bytes.size() % 8 != 0 || words < static_cast<std::size_t>(header_words) ||
      get_u64(bytes, 0) != kMagic) {
    fail(ErrorKind::Io, "'" + path + "' is not a valid binary matrix/vector file");
  }
  std::uint64_t rows = 1, cols = 0;
  if (header_words == 3) {
    rows = get_u64(bytes, 1);
    cols = get_u64(bytes, 2);
  } else {
    cols = get_u64(bytes, 1);
  }
  if (cols != 0 && rows > (words - header_words) / cols) {
    fail(ErrorKind::Io, "'" + path + "' header does not match its payload size");
  }
  if (words - header_words != rows * cols) {
    fail(ErrorKind::Io, "'" + path + "' header does not match its payload size");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t w = header_words;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = std::bit_cast<double>(get_u64(bytes, w++));
  return m;
}

}  // namespace

void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  put_u64(out, kMagic);
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
  finish(out, path);
}

Eigen::MatrixXd read_matrix(const std::string& path) { return decode(slurp(path), path, 3); }

void write_vector(const std::string& path, const Eigen::VectorXd& v) {
  auto out = open_out(path);
  put_u64(out, kMagic);
  put_u64(out, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f64(out, v[i]);
  finish(out, path);
}

Eigen::VectorXd read_vector(const std::string& path) {
  return decode(slurp(path), path, 2).row(0).transpose();
}

Eigen::MatrixXd read_matrix_or_vector(const std::string& path) {
  const auto bytes = slurp(path);
  if (!has_binary_magic(bytes)) fail(ErrorKind::Io, "'" + path + "' is not a binary matrix/vector file");
  // A vector's payload is exactly `length` words after a two-word header.
  const std::size_t words = bytes.size() / 8;
  if (words >= 2 && get_u64(bytes, 1) == words - 2) return decode(bytes, path, 2);
  return decode(bytes, path, 3);
}

Eigen::VectorXd read_signal_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double v = 0.0;
    if (!(ss >> v)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fail(ErrorKind::Io, "'" + path + "' line " + std::to_string(lineno) + " is not a number");
    }
    values.push_back(v);
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Eigen::VectorXd read_signal(const std::string& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::Io, "input file '" + path + "' does not exist");
  const auto bytes = slurp(path);
  if (has_binary_magic(bytes)) return decode(bytes, path, 2).row(0).transpose();
  return read_signal_text(path);
}

void write_signal_text(const std::string& path, const Eigen::VectorXd& v) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << '\n';
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

}  // namespace bcs::io
