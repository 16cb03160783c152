#pragma once

// File formats.
//
// CIM1 (binary, little-endian):
//   "CIM1" | u32 rows | u32 cols | rows*cols x (f64 re, f64 im), row-major
// Sensing matrices insert a kind byte after the header (0 = ComplexGaussian,
// 1 = BernoulliK), followed by u32 k for BernoulliK, then the entries.
//
// CSV (text):
//   rows,cols
//   row,col,re,im      (one line per entry, any order, missing entries are 0)
// Sensing matrices in CSV carry no kind tag; a {0,1} matrix with a constant
// column weight reads back as BernoulliK.

#include "thzcs/core.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace thzcs {

enum class FileFormat { Cim, Csv };

inline FileFormat parse_format(std::string_view s) {
  if (s == "cim") return FileFormat::Cim;
  if (s == "csv") return FileFormat::Csv;
  throw Error(ErrorCode::InvalidConfig, "unknown format '" + std::string(s) + "' (cim|csv)");
}

namespace io_detail {

inline constexpr std::array<char, 4> kMagic{'C', 'I', 'M', '1'};
inline constexpr std::size_t kHeaderBytes = 12;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

inline double get_f64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return std::bit_cast<double>(v);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

inline bool is_cim(std::string_view bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic.data(), 4) == 0;
}

inline std::string cim_header(Index rows, Index cols) {
  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(rows));
  put_u32(out, static_cast<std::uint32_t>(cols));
  return out;
}

inline void put_entries(std::string& out, const CMatrix& m) {
  out.reserve(out.size() + static_cast<std::size_t>(m.size()) * 16);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      put_f64(out, m(r, c).real());
      put_f64(out, m(r, c).imag());
    }
}

inline CMatrix get_entries(std::string_view in, std::size_t at, Index rows, Index cols) {
  CMatrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = cplx(get_f64(in, at), get_f64(in, at + 8));
      at += 16;
    }
  return m;
}

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string to_csv(const CMatrix& m) {
  std::string out = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      out += std::to_string(r) + "," + std::to_string(c) + "," + format_double(m(r, c).real()) + "," +
             format_double(m(r, c).imag()) + "\n";
    }
  return out;
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line) {
  T v{};
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw Error(ErrorCode::Format, "line " + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  return out;
}

inline CMatrix from_csv(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      const auto end = text.find('\n', pos);
      line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
      pos = end == std::string_view::npos ? text.size() : end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return true;
    }
    return false;
  };
  std::string_view line;
  if (!next_line(line)) throw Error(ErrorCode::Format, "empty CSV");
  auto head = split(line, ',');
  if (head.size() != 2) throw Error(ErrorCode::Format, "CSV header must be 'rows,cols'");
  const auto rows = parse_number<long long>(head[0], line_no);
  const auto cols = parse_number<long long>(head[1], line_no);
  if (rows < 1 || cols < 1) throw Error(ErrorCode::Format, "CSV dimensions must be positive");
  CMatrix m = CMatrix::Zero(rows, cols);
  std::vector<bool> seen(static_cast<std::size_t>(rows * cols), false);
  while (next_line(line)) {
    auto f = split(line, ',');
    if (f.size() != 4)
      throw Error(ErrorCode::Format, "line " + std::to_string(line_no) + ": expected row,col,re,im");
    const auto r = parse_number<long long>(f[0], line_no);
    const auto c = parse_number<long long>(f[1], line_no);
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw Error(ErrorCode::Format, "line " + std::to_string(line_no) + ": index out of range");
    auto flag = seen[static_cast<std::size_t>(r * cols + c)];
    if (flag) throw Error(ErrorCode::Format, "line " + std::to_string(line_no) + ": duplicate entry");
    flag = true;
    m(r, c) = cplx(parse_number<double>(f[2], line_no), parse_number<double>(f[3], line_no));
  }
  return m;
}

inline SensingMatrix infer_sensing(CMatrix m) {
  int weight = -1;
  bool binary = true;
  for (Index c = 0; c < m.cols() && binary; ++c) {
    int ones = 0;
    for (Index r = 0; r < m.rows(); ++r) {
      if (m(r, c) == cplx(1.0, 0.0)) ++ones;
      else if (m(r, c) != cplx(0.0, 0.0)) binary = false;
    }
    if (weight < 0) weight = ones;
    else if (ones != weight) binary = false;
  }
  if (binary && weight >= 1) return SensingMatrix(std::move(m), SensingKind::BernoulliK, weight);
  return SensingMatrix(std::move(m), SensingKind::ComplexGaussian);
}

}  // namespace io_detail

inline std::string encode_matrix(const CMatrix& m, FileFormat fmt) {
  if (fmt == FileFormat::Csv) return io_detail::to_csv(m);
  std::string out = io_detail::cim_header(m.rows(), m.cols());
  io_detail::put_entries(out, m);
  return out;
}

inline std::string encode_sensing(const SensingMatrix& phi, FileFormat fmt) {
  if (fmt == FileFormat::Csv) return io_detail::to_csv(phi.matrix());
  std::string out = io_detail::cim_header(phi.m(), phi.n());
  out.push_back(static_cast<char>(phi.kind()));
  if (phi.kind() == SensingKind::BernoulliK) io_detail::put_u32(out, static_cast<std::uint32_t>(phi.k()));
  io_detail::put_entries(out, phi.matrix());
  return out;
}

/// Decodes a plain CIM1 or CSV matrix.
inline CMatrix decode_matrix(std::string_view bytes) {
  if (!io_detail::is_cim(bytes)) return io_detail::from_csv(bytes);
  if (bytes.size() < io_detail::kHeaderBytes) throw Error(ErrorCode::Format, "truncated CIM1 header");
  const Index rows = io_detail::get_u32(bytes, 4);
  const Index cols = io_detail::get_u32(bytes, 8);
  const auto expected = io_detail::kHeaderBytes + static_cast<std::size_t>(rows * cols) * 16;
  if (bytes.size() != expected)
    throw Error(ErrorCode::Format, "CIM1 payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                                       std::to_string(expected));
  return io_detail::get_entries(bytes, io_detail::kHeaderBytes, rows, cols);
}

inline SensingMatrix decode_sensing(std::string_view bytes) {
  if (!io_detail::is_cim(bytes)) return io_detail::infer_sensing(io_detail::from_csv(bytes));
  if (bytes.size() < io_detail::kHeaderBytes + 1) throw Error(ErrorCode::Format, "truncated CIM1 header");
  const Index rows = io_detail::get_u32(bytes, 4);
  const Index cols = io_detail::get_u32(bytes, 8);
  const auto tag = static_cast<unsigned char>(bytes[io_detail::kHeaderBytes]);
  std::size_t at = io_detail::kHeaderBytes + 1;
  int k = 0;
  if (tag == 1) {
    if (bytes.size() < at + 4) throw Error(ErrorCode::Format, "truncated Bernoulli k field");
    k = static_cast<int>(io_detail::get_u32(bytes, at));
    at += 4;
  } else if (tag != 0) {
    throw Error(ErrorCode::Format, "unknown sensing kind tag " + std::to_string(tag));
  }
  const auto expected = at + static_cast<std::size_t>(rows * cols) * 16;
  if (bytes.size() != expected)
    throw Error(ErrorCode::Format, "sensing payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                                       std::to_string(expected));
  return SensingMatrix(io_detail::get_entries(bytes, at, rows, cols), static_cast<SensingKind>(tag), k);
}

/// True when `bytes` is a CIM1 sensing file (kind tag present) rather than a
/// plain matrix; decided from the payload length.
inline bool is_cim_sensing(std::string_view bytes) {
  if (!io_detail::is_cim(bytes) || bytes.size() < io_detail::kHeaderBytes) return false;
  const auto n = static_cast<std::size_t>(io_detail::get_u32(bytes, 4)) * io_detail::get_u32(bytes, 8) * 16;
  return bytes.size() != io_detail::kHeaderBytes + n;
}

inline void write_image(const std::filesystem::path& path, const ComplexImage& img, FileFormat fmt) {
  io_detail::write_file(path, encode_matrix(img.matrix(), fmt));
}

inline ComplexImage read_image(const std::filesystem::path& path) {
  return ComplexImage(decode_matrix(io_detail::read_file(path)));
}

inline void write_measurements(const std::filesystem::path& path, const MeasurementMatrix& y, FileFormat fmt) {
  io_detail::write_file(path, encode_matrix(y.matrix(), fmt));
}

inline MeasurementMatrix read_measurements(const std::filesystem::path& path) {
  return MeasurementMatrix(decode_matrix(io_detail::read_file(path)));
}

inline void write_sensing(const std::filesystem::path& path, const SensingMatrix& phi, FileFormat fmt) {
  io_detail::write_file(path, encode_sensing(phi, fmt));
}

inline SensingMatrix read_sensing(const std::filesystem::path& path) {
  return decode_sensing(io_detail::read_file(path));
}

}  // namespace thzcs
