#pragma once

// Synthetic THz-like test images: geometric shapes with complex amplitudes,
// low-pass filtered by a truncated Gaussian kernel.

#include "thzcs/core.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace thzcs {

enum class ShapeKind { Rect, Disk, Cross, Ring };

inline ShapeKind parse_shape_kind(std::string_view s) {
  if (s == "rect") return ShapeKind::Rect;
  if (s == "disk") return ShapeKind::Disk;
  if (s == "cross") return ShapeKind::Cross;
  if (s == "ring") return ShapeKind::Ring;
  throw Error(ErrorCode::InvalidSpec, "unknown shape kind '" + std::string(s) + "' (rect|disk|cross|ring)");
}

/// Centre and extent are fractions of the image size. For rect, disk and ring
/// the extent is the full width/diameter; cross arms are extent long and
/// extent/4 wide; rings have inner diameter 0.6 * extent.
struct Shape {
  ShapeKind kind = ShapeKind::Rect;
  double center_row = 0.5;
  double center_col = 0.5;
  double extent = 0.2;
  cplx amplitude{1.0, 0.0};
};

struct PhantomSpec {
  std::string name = "custom";
  Index size = 64;
  std::vector<Shape> shapes;
  double blur_sigma = 1.5;

  void validate() const {
    if (size < 8) throw Error(ErrorCode::InvalidSpec, "phantom size must be >= 8");
    if (!(blur_sigma >= 0.0)) throw Error(ErrorCode::InvalidSpec, "blur_sigma must be >= 0");
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    for (const auto& s : shapes) {
      if (!open_unit(s.center_row) || !open_unit(s.center_col) || !open_unit(s.extent))
        throw Error(ErrorCode::InvalidSpec, "shape centre and extent must lie in (0, 1)");
      if (!std::isfinite(s.amplitude.real()) || !std::isfinite(s.amplitude.imag()))
        throw Error(ErrorCode::InvalidSpec, "shape amplitude must be finite");
    }
  }
};

inline const std::vector<std::string>& builtin_phantom_names() {
  static const std::vector<std::string> names{"s0", "s1", "s2"};
  return names;
}

/// Built-in phantoms. Amplitudes have unit magnitude and a constant phase per
/// shape; the shapes of s1 and s2 share one row band so every image column
/// draws on the same few row blocks.
///   s0: centred square, side 0.1 N
///   s1: disk (diameter 0.12 N) left of a square (side 0.1 N)
///   s2: cross (arms 0.12 N) left of a ring (outer diameter 0.12 N)
inline PhantomSpec builtin_phantom(std::string_view name, Index size) {
  auto phase = [](double rad) { return std::polar(1.0, rad); };
  PhantomSpec spec;
  spec.name = std::string(name);
  spec.size = size;
  if (name == "s0") {
    spec.shapes = {{ShapeKind::Rect, 0.5, 0.5, 0.1, phase(0.6)}};
  } else if (name == "s1") {
    spec.shapes = {{ShapeKind::Disk, 0.5, 0.3, 0.12, phase(-1.1)},
                   {ShapeKind::Rect, 0.5, 0.7, 0.1, phase(2.2)}};
  } else if (name == "s2") {
    spec.shapes = {{ShapeKind::Cross, 0.5, 0.3, 0.12, phase(0.9)},
                   {ShapeKind::Ring, 0.5, 0.7, 0.12, phase(-2.5)}};
  } else {
    std::string valid;
    for (const auto& n : builtin_phantom_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::InvalidSpec, "unknown phantom '" + std::string(name) + "'; valid: " + valid);
  }
  return spec;
}

namespace detail {

inline bool shape_covers(const Shape& s, double dr, double dc, double n) {
  const double half = 0.5 * s.extent * n;
  switch (s.kind) {
    case ShapeKind::Rect: return std::abs(dr) <= half && std::abs(dc) <= half;
    case ShapeKind::Disk: return dr * dr + dc * dc <= half * half;
    case ShapeKind::Cross: {
      const double arm = 0.25 * half;
      return (std::abs(dr) <= half && std::abs(dc) <= arm) || (std::abs(dc) <= half && std::abs(dr) <= arm);
    }
    case ShapeKind::Ring: {
      const double r2 = dr * dr + dc * dc;
      const double inner = 0.6 * half;
      return r2 <= half * half && r2 >= inner * inner;
    }
  }
  return false;
}

/// Normalized Gaussian taps, radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    const double v = std::exp(-0.5 * (t * t) / (sigma * sigma));
    k[static_cast<std::size_t>(t + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable convolution with zero padding outside the canvas.
inline CMatrix blur(const CMatrix& img, double sigma) {
  if (sigma == 0.0) return img;
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const Index rows = img.rows();
  const Index cols = img.cols();
  CMatrix tmp = CMatrix::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      cplx acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const Index cc = c + t;
        if (cc >= 0 && cc < cols) acc += k[static_cast<std::size_t>(t + radius)] * img(r, cc);
      }
      tmp(r, c) = acc;
    }
  CMatrix out = CMatrix::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      cplx acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const Index rr = r + t;
        if (rr >= 0 && rr < rows) acc += k[static_cast<std::size_t>(t + radius)] * tmp(rr, c);
      }
      out(r, c) = acc;
    }
  return out;
}

}  // namespace detail

/// Unblurred shape raster; later shapes overwrite earlier ones.
inline CMatrix rasterize(const PhantomSpec& spec) {
  const Index n = spec.size;
  const auto nd = static_cast<double>(n);
  CMatrix canvas = CMatrix::Zero(n, n);
  for (const auto& s : spec.shapes)
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) {
        const double dr = (static_cast<double>(r) + 0.5) - s.center_row * nd;
        const double dc = (static_cast<double>(c) + 0.5) - s.center_col * nd;
        if (detail::shape_covers(s, dr, dc, nd)) canvas(r, c) = s.amplitude;
      }
  return canvas;
}

/// The seed is unused by the built-in and parametric specs; it is kept so
/// randomized specs can be added without changing the signature.
inline ComplexImage gen_phantom(const PhantomSpec& spec, std::uint64_t /*seed*/ = 0) {
  spec.validate();
  return ComplexImage(detail::blur(rasterize(spec), spec.blur_sigma));
}

}  // namespace thzcs
