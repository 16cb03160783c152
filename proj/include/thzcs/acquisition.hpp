#pragma once

// Scan-based acquisition: every image column is compressed by the same small
// M x N mask matrix, Y = Phi X. The flattened equivalent applies
// (I_cols (x) Phi) to the column-stacked image.

#include "thzcs/core.hpp"
#include "thzcs/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace thzcs {

/// Fraction of measurements saved, (n - m) / n.
class CompressionRatio {
 public:
  CompressionRatio(Index n, Index m) : n_(n), m_(m) {
    if (m < 1 || n < 1 || m > n)
      throw Error(ErrorCode::InvalidDims, "compression ratio needs 1 <= m <= n");
  }

  double value() const noexcept { return static_cast<double>(n_ - m_) / static_cast<double>(n_); }
  Index n() const noexcept { return n_; }
  Index m() const noexcept { return m_; }

 private:
  Index n_;
  Index m_;
};

inline CompressionRatio compression_ratio_scan(Index n, Index m) { return CompressionRatio(n, m); }

/// CR of the flattened architecture with S measurements of an n x n image.
inline double compression_ratio_flat(Index n, Index s) {
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  return (n2 - static_cast<double>(s)) / n2;
}

/// Measurement count realising `cr` on n rows, rounded half away from zero
/// and clamped to [1, n].
inline Index m_for_cr(Index n, double cr) {
  const double raw = std::round(static_cast<double>(n) * (1.0 - cr));
  return std::clamp<Index>(static_cast<Index>(raw), 1, n);
}

/// Real and imaginary parts i.i.d. standard normal (no 1/sqrt(2) scaling).
inline SensingMatrix gen_gaussian_complex(Index m, Index n, std::uint64_t seed) {
  if (m < 1 || m > n) throw Error(ErrorCode::InvalidDims, "gaussian matrix needs 1 <= m <= n");
  Rng rng(seed);
  CMatrix phi(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      phi(i, j) = cplx(re, im);
    }
  return SensingMatrix(std::move(phi), SensingKind::ComplexGaussian);
}

/// {0,1} matrix with exactly k ones per column at uniformly random rows
/// (partial Fisher-Yates per column).
inline SensingMatrix gen_bernoulli_k(Index m, Index n, int k, std::uint64_t seed) {
  if (m < 1 || m > n) throw Error(ErrorCode::InvalidDims, "bernoulli matrix needs 1 <= m <= n");
  if (k < 1 || k > m)
    throw Error(ErrorCode::InvalidK,
                "k = " + std::to_string(k) + " must satisfy 1 <= k <= m = " + std::to_string(m));
  Rng rng(seed);
  CMatrix phi = CMatrix::Zero(m, n);
  std::vector<Index> rows(static_cast<std::size_t>(m));
  for (Index j = 0; j < n; ++j) {
    std::iota(rows.begin(), rows.end(), Index{0});
    for (int t = 0; t < k; ++t) {
      const auto pick = t + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m - t)));
      std::swap(rows[static_cast<std::size_t>(t)], rows[static_cast<std::size_t>(pick)]);
      phi(rows[static_cast<std::size_t>(t)], j) = cplx(1.0, 0.0);
    }
  }
  return SensingMatrix(std::move(phi), SensingKind::BernoulliK, k);
}

inline MeasurementMatrix acquire_scan(const SensingMatrix& phi, const ComplexImage& x) {
  if (phi.n() != x.rows())
    throw Error(ErrorCode::DimensionMismatch, "sensing matrix has " + std::to_string(phi.n()) +
                                                  " columns but image has " +
                                                  std::to_string(x.rows()) + " rows");
  return MeasurementMatrix(phi.matrix() * x.matrix());
}

/// (I_cols (x) Phi) vec(X), with vec stacking image columns.
inline CVector acquire_kronecker(const SensingMatrix& phi, const ComplexImage& x) {
  if (phi.n() != x.rows())
    throw Error(ErrorCode::DimensionMismatch, "sensing matrix / image row mismatch");
  const Index m = phi.m();
  CVector y(m * x.cols());
  for (Index j = 0; j < x.cols(); ++j) y.segment(j * m, m).noalias() = phi.matrix() * x.matrix().col(j);
  return y;
}

/// Dense (I_cols (x) Phi); only sensible for small sizes.
inline CMatrix kronecker_operator(const SensingMatrix& phi, Index cols) {
  const Index m = phi.m();
  const Index n = phi.n();
  CMatrix big = CMatrix::Zero(m * cols, n * cols);
  for (Index j = 0; j < cols; ++j) big.block(j * m, j * n, m, n) = phi.matrix();
  return big;
}

/// Adds circular complex Gaussian noise at `snr_db` relative to the mean
/// per-entry power of y. An infinite snr_db returns y unchanged.
inline MeasurementMatrix add_awgn(const MeasurementMatrix& y, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return y;
  const double power = y.matrix().squaredNorm();
  if (power == 0.0) throw Error(ErrorCode::ZeroSignal, "cannot scale noise to a zero signal");
  const double per_entry = power / static_cast<double>(y.matrix().size());
  const double sigma = std::sqrt(per_entry / std::pow(10.0, snr_db / 10.0) / 2.0);
  Rng rng(seed);
  CMatrix out = y.matrix();
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) {
      const double re = rng.normal();
      const double im = rng.normal();
      out(i, j) += sigma * cplx(re, im);
    }
  return MeasurementMatrix(std::move(out));
}

}  // namespace thzcs
