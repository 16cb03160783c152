#pragma once

#include "thzcs/core.hpp"

#include <cmath>
#include <numbers>
#include <string_view>

namespace thzcs {

/// Sparsifying dictionary applied along image rows: X = F A.
enum class Transform { None, UnitaryDFT };

inline std::string_view to_string(Transform t) { return t == Transform::None ? "none" : "dft"; }

inline Transform parse_transform(std::string_view s) {
  if (s == "none") return Transform::None;
  if (s == "dft") return Transform::UnitaryDFT;
  throw Error(ErrorCode::InvalidConfig, "unknown transform '" + std::string(s) + "' (none|dft)");
}

/// F[j,k] = exp(-2 pi i jk / n) / sqrt(n).
inline CMatrix dft_matrix(Index n) {
  if (n < 1) throw Error(ErrorCode::InvalidDims, "DFT size must be >= 1");
  CMatrix f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) {
      // reduce jk mod n first so the phase argument stays small
      const auto r = static_cast<double>((j * k) % n);
      const double angle = -2.0 * std::numbers::pi * r / static_cast<double>(n);
      f(j, k) = scale * cplx(std::cos(angle), std::sin(angle));
    }
  return f;
}

}  // namespace thzcs
