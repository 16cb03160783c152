#pragma once

// Domain types shared by every thzcs module: complex images, sensing and
// measurement matrices, block partitions and the library error type.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace thzcs {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;

enum class ErrorCode {
  DimensionMismatch,
  ZeroReference,
  InvalidBlockSize,
  InvalidDims,
  InvalidK,
  ZeroSignal,
  SingularS,
  NumericalFailure,
  NoImprovement,
  InvalidSpec,
  InvalidConfig,
  EmptyInput,
  NonFinite,
  Io,
  Format,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::InvalidBlockSize: return "InvalidBlockSize";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::ZeroSignal: return "ZeroSignal";
    case ErrorCode::SingularS: return "SingularS";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NoImprovement: return "NoImprovement";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      const auto v = m(i, j);
      if (!std::isfinite(std::real(v)) || !std::isfinite(std::imag(v))) return false;
    }
  return true;
}

inline void require_shape(Index rows, Index cols, const char* what) {
  if (rows < 1 || cols < 1)
    throw Error(ErrorCode::InvalidDims, std::string(what) + " must have positive dimensions");
}

}  // namespace detail

/// An N_rows x N_cols matrix of complex amplitudes with finite entries.
class ComplexImage {
 public:
  ComplexImage() = default;

  ComplexImage(Index rows, Index cols) : values_(CMatrix::Zero(rows, cols)) {
    detail::require_shape(rows, cols, "image");
  }

  explicit ComplexImage(CMatrix values) : values_(std::move(values)) {
    detail::require_shape(values_.rows(), values_.cols(), "image");
    if (!detail::all_finite(values_))
      throw Error(ErrorCode::NonFinite, "image contains NaN or Inf");
  }

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  const CMatrix& matrix() const noexcept { return values_; }
  cplx operator()(Index r, Index c) const { return values_(r, c); }

 private:
  CMatrix values_;
};

/// Y = Phi X: one row per mask, one column per scanned image column.
class MeasurementMatrix {
 public:
  MeasurementMatrix() = default;

  explicit MeasurementMatrix(CMatrix values) : values_(std::move(values)) {
    detail::require_shape(values_.rows(), values_.cols(), "measurement matrix");
    if (!detail::all_finite(values_))
      throw Error(ErrorCode::NonFinite, "measurements contain NaN or Inf");
  }

  Index m() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  const CMatrix& matrix() const noexcept { return values_; }

 private:
  CMatrix values_;
};

enum class SensingKind : std::uint8_t { ComplexGaussian = 0, BernoulliK = 1 };

/// M x N mask matrix. Bernoulli-k matrices are {0,1} with exactly k ones per
/// column; square matrices are accepted (CR = 0 and identity sensing).
class SensingMatrix {
 public:
  SensingMatrix() = default;

  SensingMatrix(CMatrix values, SensingKind kind, int k = 0)
      : values_(std::move(values)), kind_(kind), k_(kind == SensingKind::BernoulliK ? k : 0) {
    detail::require_shape(values_.rows(), values_.cols(), "sensing matrix");
    if (values_.rows() > values_.cols())
      throw Error(ErrorCode::InvalidDims, "sensing matrix must have m <= n");
    if (!detail::all_finite(values_))
      throw Error(ErrorCode::NonFinite, "sensing matrix contains NaN or Inf");
    if (kind_ == SensingKind::BernoulliK) check_bernoulli();
  }

  /// Wraps an arbitrary complex matrix (e.g. identity for testing).
  static SensingMatrix dense(CMatrix values) {
    return SensingMatrix(std::move(values), SensingKind::ComplexGaussian);
  }

  Index m() const noexcept { return values_.rows(); }
  Index n() const noexcept { return values_.cols(); }
  SensingKind kind() const noexcept { return kind_; }
  int k() const noexcept { return k_; }
  const CMatrix& matrix() const noexcept { return values_; }

 private:
  void check_bernoulli() const {
    if (k_ < 1 || k_ > values_.rows())
      throw Error(ErrorCode::InvalidK, "k must satisfy 1 <= k <= m");
    for (Index j = 0; j < values_.cols(); ++j) {
      int ones = 0;
      for (Index i = 0; i < values_.rows(); ++i) {
        const cplx v = values_(i, j);
        if (v == cplx(1.0, 0.0)) ++ones;
        else if (v != cplx(0.0, 0.0))
          throw Error(ErrorCode::Format, "Bernoulli matrix entries must be 0 or 1");
      }
      if (ones != k_)
        throw Error(ErrorCode::Format, "Bernoulli column " + std::to_string(j) + " has " +
                                           std::to_string(ones) + " ones, expected " +
                                           std::to_string(k_));
    }
  }

  CMatrix values_;
  SensingKind kind_ = SensingKind::ComplexGaussian;
  int k_ = 0;
};

struct Block {
  Index offset = 0;
  Index size = 0;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Contiguous, non-overlapping blocks covering [0, total).
class BlockPartition {
 public:
  BlockPartition() = default;

  explicit BlockPartition(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    Index next = 0;
    for (const auto& b : blocks_) {
      if (b.offset != next || b.size < 1)
        throw Error(ErrorCode::InvalidBlockSize, "blocks must be contiguous and non-empty");
      next += b.size;
    }
    total_ = next;
  }

  std::size_t count() const noexcept { return blocks_.size(); }
  Index total() const noexcept { return total_; }
  const Block& operator[](std::size_t i) const { return blocks_[i]; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  auto begin() const noexcept { return blocks_.begin(); }
  auto end() const noexcept { return blocks_.end(); }

 private:
  std::vector<Block> blocks_;
  Index total_ = 0;
};

/// Uniform blocks of `block_size`; a non-divisible remainder forms a short
/// final block.
inline BlockPartition make_partition(Index n, Index block_size) {
  if (block_size < 1 || block_size > n)
    throw Error(ErrorCode::InvalidBlockSize,
                "block size " + std::to_string(block_size) + " outside [1, " + std::to_string(n) + "]");
  std::vector<Block> blocks;
  blocks.reserve(static_cast<std::size_t>((n + block_size - 1) / block_size));
  for (Index off = 0; off < n; off += block_size)
    blocks.push_back({off, std::min(block_size, n - off)});
  return BlockPartition(std::move(blocks));
}

}  // namespace thzcs
