#pragma once

// Column-by-column l1 baseline: iterative soft thresholding on
//   min_a  lambda ||a||_1 + 1/2 ||y - A a||_2^2,   A = Phi (or Phi F),
// with fixed step 1/||A||_2^2.

#include "thzcs/bsbl.hpp"
#include "thzcs/core.hpp"
#include "thzcs/transform.hpp"

#include <chrono>
#include <optional>
#include <vector>

namespace thzcs {

struct IstaOptions {
  /// Fixed shrinkage weight; when unset each column uses
  /// lambda_factor * ||A^H y_j||_inf.
  std::optional<double> lambda;
  double lambda_factor = 0.01;
  std::size_t max_iter = 1000;
  /// Relative iterate change that ends a column.
  double tol = 1e-6;
  Transform transform = Transform::None;

  void validate() const {
    if (lambda && !(*lambda > 0.0)) throw Error(ErrorCode::InvalidConfig, "lambda must be > 0");
    if (!(lambda_factor > 0.0)) throw Error(ErrorCode::InvalidConfig, "lambda_factor must be > 0");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol must be > 0");
    if (max_iter < 1) throw Error(ErrorCode::InvalidConfig, "max_iter must be >= 1");
  }
};

/// z * max(1 - t/|z|, 0): zero inside the threshold, phase preserved outside.
inline cplx soft_threshold(cplx z, double t) {
  const double mag = std::abs(z);
  if (mag <= t) return {0.0, 0.0};
  return z * (1.0 - t / mag);
}

inline double ista_objective(const CMatrix& a_op, const CVector& y, const CVector& a, double lambda) {
  return lambda * a.cwiseAbs().sum() + 0.5 * (y - a_op * a).squaredNorm();
}

struct IstaColumnResult {
  CVector coeffs;
  std::size_t iterations = 0;
  double objective = 0.0;
};

/// One column of ISTA. `step` must be <= 1 / ||A||_2^2. When `trace` is given
/// the objective after every iteration is appended to it.
inline IstaColumnResult ista_column(const CMatrix& a_op, const CVector& y, double lambda, double step,
                                    std::size_t max_iter, double tol, std::vector<double>* trace = nullptr) {
  IstaColumnResult out;
  out.coeffs = CVector::Zero(a_op.cols());
  const CMatrix a_adj = a_op.adjoint();
  const double thresh = lambda * step;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const CVector grad = a_adj * (y - a_op * out.coeffs);
    CVector next = out.coeffs + step * grad;
    for (Index k = 0; k < next.size(); ++k) next(k) = soft_threshold(next(k), thresh);
    const double change = (next - out.coeffs).norm();
    const double ref = std::max(next.norm(), 1e-300);
    out.coeffs = std::move(next);
    out.iterations = it + 1;
    if (trace) trace->push_back(ista_objective(a_op, y, out.coeffs, lambda));
    if (change <= tol * ref) break;
  }
  out.objective = ista_objective(a_op, y, out.coeffs, lambda);
  return out;
}

/// Squared spectral norm.
inline double spectral_norm_sq(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a);
  const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return s * s;
}

inline SolveReport solve_ista_columnwise(const MeasurementMatrix& y, const SensingMatrix& phi,
                                         const IstaOptions& opts) {
  opts.validate();
  if (y.m() != phi.m())
    throw Error(ErrorCode::DimensionMismatch, "Y has " + std::to_string(y.m()) + " rows, Phi has " +
                                                  std::to_string(phi.m()));
  const auto start = std::chrono::steady_clock::now();
  const Index n = phi.n();
  CMatrix f;
  CMatrix a_op = phi.matrix();
  if (opts.transform == Transform::UnitaryDFT) {
    f = dft_matrix(n);
    a_op = phi.matrix() * f;
  }
  const double lip = spectral_norm_sq(a_op);
  SolveReport report;
  CMatrix coeffs = CMatrix::Zero(n, y.cols());
  double objective = 0.0;
  if (lip > 0.0) {
    const double step = 1.0 / lip;
    for (Index j = 0; j < y.cols(); ++j) {
      const CVector yj = y.matrix().col(j);
      const double scale = (a_op.adjoint() * yj).cwiseAbs().maxCoeff();
      if (scale == 0.0) continue;
      const double lambda = opts.lambda.value_or(opts.lambda_factor * scale);
      auto col = ista_column(a_op, yj, lambda, step, opts.max_iter, opts.tol);
      coeffs.col(j) = col.coeffs;
      objective += col.objective;
      report.iterations = std::max(report.iterations, col.iterations);
    }
  }
  if (opts.transform == Transform::UnitaryDFT) coeffs = f * coeffs;
  report.estimate = ComplexImage(std::move(coeffs));
  report.cost_trajectory = {objective};
  report.stop = StopReason::Converged;
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace thzcs
