#include "support.hpp"

#include "thzcs/acquisition.hpp"
#include "thzcs/ista.hpp"
#include "thzcs/metrics.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace thzcs;

TEST(SoftThreshold, ZeroInsideAndPhaseOutside) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 1000; ++t) {
    const cplx z(nd(gen), nd(gen));
    const double th = std::abs(nd(gen));
    const cplx out = soft_threshold(z, th);
    if (std::abs(z) <= th) {
      ASSERT_EQ(out, cplx(0, 0));
    } else {
      ASSERT_NEAR(std::arg(out), std::arg(z), 1e-12);
      ASSERT_NEAR(std::abs(out), std::abs(z) - th, 1e-12);
    }
  }
  EXPECT_EQ(soft_threshold(cplx(0.3, 0.4), 0.5), cplx(0, 0));
}

TEST(Ista, ZeroMeasurements) {
  const auto phi = gen_gaussian_complex(4, 8, 1);
  const auto r = solve_ista_columnwise(MeasurementMatrix(CMatrix::Zero(4, 3)), phi, IstaOptions{});
  EXPECT_EQ(r.estimate.matrix(), CMatrix::Zero(8, 3));
}

TEST(Ista, SpikeWithOrthonormalRows) {
  // rows of a unitary matrix: Phi Phi^H = I
  std::mt19937_64 gen(2);
  const Index n = 32, m = 16;
  const CMatrix u = Eigen::HouseholderQR<CMatrix>(oracle::random_complex(n, n, gen)).householderQ();
  const CMatrix phi = u.topRows(m);
  CVector x = CVector::Zero(n);
  x(7) = cplx(2.0, -1.0);
  const CVector y = phi * x;
  // shrinking lambda: the bias of the l1 estimate falls with it
  const CMatrix xm = x;
  double prev = -INFINITY;
  for (double lambda : {1e-2, 1e-3, 1e-4}) {
    const CMatrix est = ista_column(phi, y, lambda, 1.0, 50000, 1e-15).coeffs;
    const double snr = snr_db(xm, est).value();
    EXPECT_GT(snr, prev);
    prev = snr;
  }
  EXPECT_GT(prev, 40.0);
}

TEST(Ista, ObjectiveNonIncreasing) {
  std::mt19937_64 gen(3);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = oracle::random_complex(8, 20, gen);
    const CVector y = oracle::random_complex(8, 1, gen);
    const double step = 1.0 / spectral_norm_sq(a);
    std::vector<double> trace;
    ista_column(a, y, 0.3, step, 200, 1e-14, &trace);
    for (std::size_t k = 1; k < trace.size(); ++k) ASSERT_LE(trace[k], trace[k - 1] + 1e-12 * (1 + trace[k - 1]));
  }
}

TEST(Ista, ColumnPermutationEquivariance) {
  std::mt19937_64 gen(4);
  const auto phi = gen_gaussian_complex(10, 24, 5);
  const CMatrix y = oracle::random_complex(10, 6, gen);
  std::vector<Index> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  CMatrix yp(10, 6);
  for (Index j = 0; j < 6; ++j) yp.col(j) = y.col(perm[static_cast<std::size_t>(j)]);
  const auto a = solve_ista_columnwise(MeasurementMatrix(y), phi, IstaOptions{});
  const auto b = solve_ista_columnwise(MeasurementMatrix(yp), phi, IstaOptions{});
  for (Index j = 0; j < 6; ++j)
    EXPECT_EQ(b.estimate.matrix().col(j), a.estimate.matrix().col(perm[static_cast<std::size_t>(j)]));
}

TEST(Ista, TransformPathAndErrors) {
  const Index n = 32;
  CMatrix a = CMatrix::Zero(n, 4);
  a(3, 0) = 1.0;
  a(5, 1) = cplx(0, 2);
  a(3, 2) = -1.0;
  a(9, 3) = cplx(1, 1);
  const CMatrix x = dft_matrix(n) * a;
  const auto phi = gen_gaussian_complex(16, n, 9);
  IstaOptions o;
  o.transform = Transform::UnitaryDFT;
  const auto r = solve_ista_columnwise(acquire_scan(phi, ComplexImage(x)), phi, o);
  EXPECT_GT(snr_db(ComplexImage(x), r.estimate).value(), 20.0);

  try {
    solve_ista_columnwise(MeasurementMatrix(CMatrix::Ones(5, 2)), phi, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  IstaOptions bad;
  bad.lambda = -1.0;
  EXPECT_THROW(bad.validate(), Error);
}
