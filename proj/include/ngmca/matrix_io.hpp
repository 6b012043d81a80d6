#pragma once

// Matrix files.
//
// CSV: headerless, one matrix row per line, comma separated, shortest
// round-trip decimal representation (exact on reload).
//
// Binary: 16-byte header followed by rows*cols IEEE-754 doubles, row-major,
// little-endian:
//   bytes 0-7    magic "NGMCAMAT"
//   bytes 8-11   rows  (uint32, little-endian)
//   bytes 12-15  cols  (uint32, little-endian)

#include "ngmca/core.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace ngmca::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<char, 8> kBinaryMagic = {'N', 'G', 'M', 'C', 'A', 'M', 'A', 'T'};

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline void write_csv(const Matrix& m, std::ostream& os) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

inline void write_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(m, os);
  if (!os) throw IoError("write failed for " + path.string());
}

inline Matrix read_csv(std::istream& is, const std::string& origin = "<stream>") {
  std::vector<double> values;
  Index rows = 0, cols = -1;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Index count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      std::string_view field = rest.substr(0, comma);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw IoError(origin + ": line " + std::to_string(rows + 1) + ": cannot parse '" + std::string(field) + "'");
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols < 0) cols = count;
    if (count != cols)
      throw IoError(origin + ": line " + std::to_string(rows + 1) + " has " + std::to_string(count) +
                    " fields, expected " + std::to_string(cols));
    ++rows;
  }
  if (rows == 0) return Matrix(0, 0);
  return Eigen::Map<Matrix>(values.data(), rows, cols);
}

inline Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_csv(is, path.string());
}

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b.data(), 4);
}

inline std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write_binary(const Matrix& m, std::ostream& os) {
  if (m.rows() > 0xffffffffLL || m.cols() > 0xffffffffLL) throw IoError("matrix too large for the binary format");
  os.write(kBinaryMagic.data(), kBinaryMagic.size());
  detail::put_u32(os, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const auto bits = std::bit_cast<std::uint64_t>(m(i, j));
      std::array<char, 8> b{};
      for (int k = 0; k < 8; ++k) b[static_cast<std::size_t>(k)] = static_cast<char>((bits >> (8 * k)) & 0xff);
      os.write(b.data(), 8);
    }
}

inline void write_binary(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_binary(m, os);
  if (!os) throw IoError("write failed for " + path.string());
}

inline Matrix read_binary(std::istream& is, const std::string& origin = "<stream>") {
  std::array<unsigned char, 16> header{};
  if (!is.read(reinterpret_cast<char*>(header.data()), 16)) throw IoError(origin + ": truncated header");
  if (std::memcmp(header.data(), kBinaryMagic.data(), kBinaryMagic.size()) != 0)
    throw IoError(origin + ": bad magic, not a matrix file");
  const Index rows = detail::get_u32(header.data() + 8);
  const Index cols = detail::get_u32(header.data() + 12);
  Matrix m(rows, cols);
  std::array<unsigned char, 8> b{};
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw IoError(origin + ": truncated data");
      std::uint64_t bits = 0;
      for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(k)]) << (8 * k);
      m(i, j) = std::bit_cast<double>(bits);
    }
  return m;
}

inline Matrix read_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_binary(is, path.string());
}

/// Dispatches on the extension: ".csv" for text, anything else binary.
inline Matrix read_matrix(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_csv(path) : read_binary(path);
}

inline void write_matrix(const Matrix& m, const std::filesystem::path& path) {
  if (path.extension() == ".csv")
    write_csv(m, path);
  else
    write_binary(m, path);
}

}  // namespace ngmca::io
