#pragma once

// Independent dense oracles and random instance builders for the tests.
// Everything here avoids the library's own factorizations: C is formed
// explicitly and inverted with FullPivLU.

#include "thzcs/bsbl.hpp"
#include "thzcs/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <random>

namespace oracle {

using thzcs::BlockPartition;
using thzcs::cplx;
using thzcs::CMatrix;
using thzcs::HyperParams;
using thzcs::Index;

inline CMatrix random_complex(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  CMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = cplx(nd(gen), nd(gen));
  return m;
}

/// Random Hermitian positive definite d x d.
inline CMatrix random_hpd(Index d, std::mt19937_64& gen) {
  const CMatrix a = random_complex(d, d, gen);
  return a * a.adjoint() + 0.5 * CMatrix::Identity(d, d);
}

/// C = beta^-1 I + sum_{i in gamma, i != skip} gamma_i Phi_i Phi_i^H by triple loop.
inline CMatrix dense_c(const CMatrix& phi, const BlockPartition& part, const HyperParams& h, long skip = -1) {
  const Index m = phi.rows();
  CMatrix c = CMatrix::Identity(m, m) / h.beta;
  for (const auto& [i, g] : h.gamma) {
    if (static_cast<long>(i) == skip) continue;
    const auto& b = part[i];
    for (Index r = 0; r < m; ++r)
      for (Index s = 0; s < m; ++s) {
        cplx acc = 0.0;
        for (Index k = b.offset; k < b.offset + b.size; ++k) acc += phi(r, k) * std::conj(phi(s, k));
        c(r, s) += g * acc;
      }
  }
  return c;
}

/// cols log|C| + Tr[Y^H C^-1 Y] via LU determinant and explicit inverse.
inline double direct_cost(const CMatrix& phi, const CMatrix& y, const BlockPartition& part, const HyperParams& h) {
  const CMatrix c = dense_c(phi, part, h);
  Eigen::FullPivLU<CMatrix> lu(c);
  const double logdet = std::log(std::abs(lu.determinant()));
  const CMatrix inv = lu.inverse();
  const cplx fit = (y.adjoint() * inv * y).trace();
  return static_cast<double>(y.cols()) * logdet + fit.real();
}

struct LeaveOneOut {
  CMatrix s;
  CMatrix q;
};

/// s_i = Phi_i^H C_{-i}^-1 Phi_i, q_i = Phi_i^H C_{-i}^-1 Y from scratch.
inline LeaveOneOut loo(const CMatrix& phi, const CMatrix& y, const BlockPartition& part, const HyperParams& h,
                       std::size_t i) {
  const CMatrix inv = Eigen::FullPivLU<CMatrix>(dense_c(phi, part, h, static_cast<long>(i))).inverse();
  const auto pi = phi.middleCols(part[i].offset, part[i].size);
  return {pi.adjoint() * inv * pi, pi.adjoint() * inv * y};
}

/// (1/(d cols)) Re Tr[s^-1 (q q^H - s) s^-1] with an explicit inverse.
inline double gamma_formula(const CMatrix& s, const CMatrix& q) {
  const CMatrix si = Eigen::FullPivLU<CMatrix>(s).inverse();
  const cplx tr = (si * (q * q.adjoint() - s) * si).trace();
  return tr.real() / static_cast<double>(s.rows() * q.cols());
}

/// L(i; gamma) = cols log|I + gamma s| - Tr[q^H (gamma^-1 I + s)^-1 q].
inline double block_cost_formula(const CMatrix& s, const CMatrix& q, double gamma) {
  if (gamma == 0.0) return 0.0;
  const Index d = s.rows();
  const CMatrix a = CMatrix::Identity(d, d) + gamma * s;
  const double logdet = std::log(std::abs(Eigen::FullPivLU<CMatrix>(a).determinant()));
  const CMatrix b = CMatrix::Identity(d, d) / gamma + s;
  const cplx tr = (q.adjoint() * Eigen::FullPivLU<CMatrix>(b).inverse() * q).trace();
  return static_cast<double>(q.cols()) * logdet - tr.real();
}

inline double rel_err(const CMatrix& a, const CMatrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

/// Small random problem for oracle comparisons (M <= 16, n <= 24, cols <= 8,
/// block size 2..4) with a random subset of blocks active.
struct Instance {
  CMatrix phi;
  CMatrix y;
  BlockPartition part{std::vector<thzcs::Block>{{0, 1}}};
  HyperParams hyper;
};

inline Instance random_instance(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<Index> bs_d(2, 4), cols_d(1, 8);
  const Index bs = bs_d(gen);
  const Index blocks = std::uniform_int_distribution<Index>(2, 24 / bs)(gen);
  const Index n = bs * blocks;
  const Index m = std::uniform_int_distribution<Index>(std::max<Index>(2, bs), std::min<Index>(16, n))(gen);
  Instance inst;
  inst.phi = random_complex(m, n, gen);
  inst.y = random_complex(m, cols_d(gen), gen);
  inst.part = thzcs::make_partition(n, bs);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  inst.hyper.beta = 0.5 + 4.0 * u(gen);
  for (std::size_t i = 0; i < inst.part.count(); ++i)
    if (u(gen) < 0.4) inst.hyper.gamma[i] = 0.05 + 2.0 * u(gen);
  return inst;
}

}  // namespace oracle

namespace oracle {

/// Engine placed at the instance's hyperparameters.
inline thzcs::bsbl::Engine<cplx> engine_at(const Instance& inst) {
  thzcs::bsbl::Engine<cplx> e(inst.phi, inst.y, inst.part, 1.0 / inst.hyper.beta);
  for (const auto& [i, g] : inst.hyper.gamma) e.apply({i, thzcs::StepAction::Add, 0.0, g});
  return e;
}

}  // namespace oracle
