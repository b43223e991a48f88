#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace isacd2d {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// 10·log10(x); values at or below zero map to -300 dB so CSV output stays finite.
inline double to_db(double linear) {
  return linear > 1e-30 ? 10.0 * std::log10(linear) : -300.0;
}

inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// v^H M v, real part (M Hermitian).
inline double quad_form(const CMat& m, const CVec& v) {
  return v.dot(m * v).real();
}

inline CMat outer(const CVec& v) { return v * v.adjoint(); }

inline bool is_hermitian(const CMat& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline CMat hermitian_part(const CMat& m) { return 0.5 * (m + m.adjoint()); }

/// Eigenvalues in descending order.
inline RVec eigenvalues_desc(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

/// λ1/λ2 of a Hermitian PSD matrix; +inf when λ2 ≤ 0 (exactly rank one or less).
inline double rank_one_ratio(const CMat& h) {
  if (h.rows() < 2) return std::numeric_limits<double>::infinity();
  const RVec ev = eigenvalues_desc(h);
  if (ev(1) <= 0.0) return std::numeric_limits<double>::infinity();
  return ev(0) / ev(1);
}

}  // namespace isacd2d
