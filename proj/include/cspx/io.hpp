#pragma once

#include <Eigen/Core>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cspx/types.hpp"

namespace cspx::io {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");
static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr char kMagic[4] = {'C', 'S', 'P', 'X'};
inline constexpr std::uint32_t kVectorVersion = 1;
inline constexpr std::uint32_t kMatrixVersion = 2;

// Vector file, version 1: magic "CSPX", u32 version, u64 element count,
// then count little-endian IEEE-754 doubles.
inline void write_vector(const std::string& path, const Vector<double>& v) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out.write(kMagic, 4);
  const std::uint32_t version = kVectorVersion;
  const std::uint64_t count = static_cast<std::uint64_t>(v.size());
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(8 * count));
  if (!out) throw ParseError("short write: " + path);
}

// Matrix file, version 2: the vector layout plus one extra u64 row count
// after the 16-byte header; payload is row-major.
inline void write_matrix(const std::string& path, const Matrix<double>& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out.write(kMagic, 4);
  const std::uint32_t version = kMatrixVersion;
  const std::uint64_t count = static_cast<std::uint64_t>(m.size());
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(&rows), 8);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(8 * count));
  if (!out) throw ParseError("short write: " + path);
}

namespace detail {

struct Header {
  std::uint32_t version{0};
  std::uint64_t count{0};
};

inline Header read_header(std::ifstream& in, const std::string& path) {
  char magic[4];
  Header h;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&h.version), 4);
  in.read(reinterpret_cast<char*>(&h.count), 8);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("bad or truncated header: " + path);
  return h;
}

}  // namespace detail

inline Vector<double> read_vector(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path);
  const auto h = detail::read_header(in, path);
  if (h.version != kVectorVersion)
    throw ParseError("unexpected format version " + std::to_string(h.version) + ": " + path);
  Vector<double> v(static_cast<Index>(h.count));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(8 * h.count));
  if (!in) throw ParseError("truncated payload: " + path);
  return v;
}

inline Matrix<double> read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open: " + path);
  const auto h = detail::read_header(in, path);
  if (h.version != kMatrixVersion)
    throw ParseError("unexpected format version " + std::to_string(h.version) + ": " + path);
  std::uint64_t rows = 0;
  in.read(reinterpret_cast<char*>(&rows), 8);
  if (!in || rows == 0 || h.count % rows != 0)
    throw ParseError("bad matrix dimensions: " + path);
  const std::uint64_t cols = h.count / rows;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
      static_cast<Index>(rows), static_cast<Index>(cols));
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(8 * h.count));
  if (!in) throw ParseError("truncated payload: " + path);
  return rm;
}

// Reads either a binary vector file or newline-separated decimal text
// (plain or scientific notation), picking by the magic bytes.
inline Vector<double> read_vector_auto(const std::string& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw ParseError("cannot open: " + path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    if (probe.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) return read_vector(path);
  }
  std::ifstream in(path);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      throw ParseError("not a number: '" + token + "' in " + path);
    }
    if (used != token.size()) throw ParseError("not a number: '" + token + "' in " + path);
    values.push_back(v);
  }
  if (values.empty()) throw ParseError("no values found: " + path);
  return Eigen::Map<const Vector<double>>(values.data(), static_cast<Index>(values.size()));
}

// One JSON object per line; mirrors the benchmark table columns.
struct RunReport {
  std::string method;
  Index n{0};
  double k{0};
  Variant variant{Variant::EqualitySlice};
  int iterations{0};
  double feasibility_gap{0};
  double wall_time_seconds{0};
  std::uint64_t seed{0};
  Status status{Status::Converged};
};

inline nlohmann::json to_json(const RunReport& r) {
  if (!std::isfinite(r.k) || !std::isfinite(r.feasibility_gap) ||
      !std::isfinite(r.wall_time_seconds))
    throw std::invalid_argument("RunReport: numeric fields must be finite");
  return nlohmann::json{{"method", r.method},
                        {"n", r.n},
                        {"k", r.k},
                        {"variant", to_string(r.variant)},
                        {"iterations", r.iterations},
                        {"feasibility_gap", r.feasibility_gap},
                        {"wall_time_seconds", r.wall_time_seconds},
                        {"seed", r.seed},
                        {"status", to_string(r.status)}};
}

inline std::string to_json_line(const RunReport& r) { return to_json(r).dump(); }

}  // namespace cspx::io
