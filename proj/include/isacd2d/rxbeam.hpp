#pragma once

// Closed-form radar receive filter (MVDR) and the radar SINR it attains.

#include "isacd2d/errors.hpp"
#include "isacd2d/linalg.hpp"
#include "isacd2d/scenario.hpp"

namespace isacd2d {

/// G = B F B^H + Σ_m p_m h_m h_m^H + σ_r² I. Hermitian positive definite.
struct InterferenceMatrix {
  CMat g;
};

/// `include_d2d = false` drops the D2D term (sensing-only objective).
inline InterferenceMatrix interference_matrix(const ChannelSet& ch, const CMat& f, const RVec& p,
                                              bool include_d2d = true) {
  const CMat b = clutter_si_matrix(ch);
  CMat g = b * f * b.adjoint();
  if (include_d2d)
    for (int m = 0; m < p.size(); ++m) g.noalias() += p(m) * outer(ch.h_d2dtx_bs[m]);
  g.diagonal().array() += ch.noise.radar;
  return {hermitian_part(g)};
}

/// Solves G x = rhs through a Hermitian Cholesky factorization.
inline CVec hermitian_solve(const CMat& g, const CVec& rhs) {
  Eigen::LLT<CMat> llt(g);
  if (llt.info() != Eigen::Success)
    throw NumericalFailure("interference matrix is not numerically positive definite");
  CVec x = llt.solve(rhs);
  x += llt.solve(rhs - g * x);  // one refinement step
  return x;
}

/// f(G) = a^H G^{-1} a.
inline double inverse_quad(const InterferenceMatrix& g, const CVec& a) {
  return a.dot(hermitian_solve(g.g, a)).real();
}

/// u = G^{-1} a_r(θ0) / (a_r^H(θ0) G^{-1} a_r(θ0)); u^H a_r(θ0) = 1.
inline CVec mvdr(const InterferenceMatrix& g, double theta0_deg) {
  const CVec a = steering_vector(theta0_deg, static_cast<int>(g.g.rows()));
  const CVec x = hermitian_solve(g.g, a);
  const cd denom = a.dot(x);
  if (!(std::abs(denom) > 0.0)) throw NumericalFailure("degenerate MVDR normalization");
  return x / denom.real();
}

/// SINR_r at the MVDR filter: |α0|² (a_t^H F a_t)(a_r^H G^{-1} a_r).
inline double optimal_radar_sinr(const ChannelSet& ch, const CMat& f, const RVec& p,
                                 bool include_d2d = true) {
  const CVec at = steering_vector(ch.target_angle_deg, ch.n_tx);
  const CVec ar = steering_vector(ch.target_angle_deg, ch.n_rx);
  const double phi = std::max(0.0, quad_form(f, at));
  return std::norm(ch.target_amp) * phi * inverse_quad(interference_matrix(ch, f, p, include_d2d), ar);
}

}  // namespace isacd2d
