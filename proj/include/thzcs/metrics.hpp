#pragma once

#include "thzcs/core.hpp"

#include <cmath>
#include <limits>

namespace thzcs {

/// Recovery SNR in dB. Exact recovery (zero error) is a distinct outcome.
class SnrDb {
 public:
  static SnrDb exact() { return SnrDb(std::numeric_limits<double>::infinity()); }
  static SnrDb of(double db) { return SnrDb(db); }

  bool is_exact() const noexcept { return std::isinf(value_) && value_ > 0; }
  /// +inf for exact outcomes.
  double value() const noexcept { return value_; }

 private:
  explicit SnrDb(double v) : value_(v) {}
  double value_;
};

template <typename Derived>
double frobenius_norm_sq(const Eigen::MatrixBase<Derived>& x) {
  return x.squaredNorm();
}

inline double frobenius_norm_sq(const ComplexImage& x) { return x.matrix().squaredNorm(); }

inline SnrDb snr_db(const CMatrix& truth, const CMatrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw Error(ErrorCode::DimensionMismatch, "truth and estimate differ in shape");
  const double signal = truth.squaredNorm();
  if (signal == 0.0) throw Error(ErrorCode::ZeroReference, "reference image is all zero");
  const double err = (estimate - truth).squaredNorm();
  if (err == 0.0) return SnrDb::exact();
  return SnrDb::of(10.0 * std::log10(signal / err));
}

inline SnrDb snr_db(const ComplexImage& truth, const ComplexImage& estimate) {
  return snr_db(truth.matrix(), estimate.matrix());
}

}  // namespace thzcs
