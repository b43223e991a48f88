#pragma once

// Complex Hermitian ↔ real symmetric embedding:  H = R + jI  ↦  [[R, −I], [I, R]].
// ⟨emb(C), emb(X)⟩ = 2·Re tr(C X), so tr(C X) = ½⟨emb C, emb X⟩ for Hermitian C, X.

#include "isacd2d/conic/program.hpp"
#include "isacd2d/errors.hpp"
#include "isacd2d/linalg.hpp"

namespace isacd2d::conic {

/// How embedded blocks keep the [[X, −Y], [Y, X]] pattern.
enum class ComplexStructure {
  kProjected,  // data are embeddings; the complex block is recovered by projection
  kExplicit,   // n(n+1) equality rows pin the pattern inside the solver
};

inline RMat embed_complex(const CMat& h, double tol = 1e-10) {
  if (h.rows() != h.cols()) throw InvalidScenario("embed_complex: matrix is not square");
  if (!is_hermitian(h, tol)) throw InvalidScenario("embed_complex: matrix is not Hermitian");
  const auto n = h.rows();
  RMat r(2 * n, 2 * n);
  const RMat re = 0.5 * (h.real() + h.real().transpose());
  const RMat im = 0.5 * (h.imag() - h.imag().transpose());
  r << re, -im, im, re;
  return r;
}

/// Hermitian matrix whose embedding is closest (Frobenius) to the 2n×2n block x.
inline CMat extract_complex(const RMat& x) {
  if (x.rows() != x.cols() || x.rows() % 2 != 0) throw InvalidScenario("extract_complex: need an even square block");
  const auto n = x.rows() / 2;
  const RMat re = 0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  const RMat im = 0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  CMat h(n, n);
  h.real() = 0.5 * (re + re.transpose());
  h.imag() = 0.5 * (im - im.transpose());
  return h;
}

/// Adds equality rows X11 = X22 and X21 = −X21ᵀ for an embedded block of size 2n.
inline void add_structure_constraints(ConicProgram& p, int block) {
  const int dim = p.psd_dims().at(block);
  if (dim % 2 != 0) throw ConstructionError("structure constraints need an even block");
  const int n = dim / 2;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      RMat c = RMat::Zero(dim, dim);
      c(i, j) += 0.5;
      c(j, i) += 0.5;
      c(n + i, n + j) -= 0.5;
      c(n + j, n + i) -= 0.5;
      p.add_equality(LinearExpr().add_block(block, c));
      RMat d = RMat::Zero(dim, dim);
      d(n + i, j) += 0.5;
      d(j, n + i) += 0.5;
      d(n + j, i) += 0.5;
      d(i, n + j) += 0.5;
      p.add_equality(LinearExpr().add_block(block, d));
    }
  }
}

}  // namespace isacd2d::conic
