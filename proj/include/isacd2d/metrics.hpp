#pragma once

// SINRs, rates, transmit covariance and beampatterns for a candidate solution.

#include <cmath>
#include <optional>
#include <vector>

#include "isacd2d/linalg.hpp"
#include "isacd2d/scenario.hpp"

namespace isacd2d {

struct Solution {
  std::vector<CVec> w;                     // transmit beamformers, one per CU
  std::optional<std::vector<CMat>> big_w;  // covariances; authoritative when present
  CVec u;                                  // radar receive filter
  RVec p;                                  // D2D transmit powers [W]
};

struct Metrics {
  std::vector<double> sinr_cu;
  std::vector<double> sinr_d2d;
  std::vector<double> rate_cu;
  std::vector<double> rate_d2d;
  double sum_rate = 0.0;
  double radar_sinr = 0.0;
};

inline std::vector<CMat> covariances_of(const Solution& sol) {
  if (sol.big_w) return *sol.big_w;
  std::vector<CMat> out;
  out.reserve(sol.w.size());
  for (const auto& w : sol.w) out.push_back(outer(w));
  return out;
}

inline CMat sum_covariance(const std::vector<CMat>& big_w, int n_tx) {
  CMat f = CMat::Zero(n_tx, n_tx);
  for (const auto& wk : big_w) f += wk;
  return f;
}

/// F = Σ_k w_k w_k^H, or Σ_k W_k when covariances are present.
inline CMat covariance(const Solution& sol) {
  if (sol.big_w) {
    if (sol.big_w->empty()) return CMat();
    return sum_covariance(*sol.big_w, static_cast<int>(sol.big_w->front().rows()));
  }
  if (sol.w.empty()) return CMat();
  CMat f = CMat::Zero(sol.w.front().size(), sol.w.front().size());
  for (const auto& w : sol.w) f.noalias() += w * w.adjoint();
  return f;
}

/// Matrix form: h^H W_k h / (Σ_{k'≠k} h^H W_k' h + Σ_m p_m |h_mk|² + σ_k²).
inline double cu_sinr(const ChannelSet& ch, const std::vector<CMat>& big_w, const RVec& p, int k) {
  const CVec& h = ch.h_bs_cu[k];
  double interference = ch.noise.cu;
  for (int kp = 0; kp < static_cast<int>(big_w.size()); ++kp)
    if (kp != k) interference += quad_form(big_w[kp], h);
  for (int m = 0; m < p.size(); ++m) interference += p(m) * std::norm(ch.h_d2dtx_cu(m, k));
  return std::max(0.0, quad_form(big_w[k], h)) / interference;
}

inline double cu_sinr(const ChannelSet& ch, const Solution& sol, int k) {
  if (sol.big_w) return cu_sinr(ch, *sol.big_w, sol.p, k);
  const CVec& h = ch.h_bs_cu[k];
  double interference = ch.noise.cu;
  for (int kp = 0; kp < static_cast<int>(sol.w.size()); ++kp)
    if (kp != k) interference += std::norm(h.dot(sol.w[kp]));
  for (int m = 0; m < sol.p.size(); ++m) interference += sol.p(m) * std::norm(ch.h_d2dtx_cu(m, k));
  return std::norm(h.dot(sol.w[k])) / interference;
}

/// p_m |h_mm|² / (h_m^H F h_m + Σ_{m'≠m} p_m' |h_m'm|² + σ_m²).
inline double d2d_sinr(const ChannelSet& ch, const CMat& f, const RVec& p, int m) {
  double interference = ch.noise.d2d + std::max(0.0, quad_form(f, ch.h_bs_d2drx[m]));
  for (int mp = 0; mp < p.size(); ++mp)
    if (mp != m) interference += p(mp) * std::norm(ch.h_d2dtx_d2drx(mp, m));
  return p(m) * std::norm(ch.h_d2dtx_d2drx(m, m)) / interference;
}

inline double d2d_sinr(const ChannelSet& ch, const Solution& sol, int m) {
  if (sol.big_w) return d2d_sinr(ch, covariance(sol), sol.p, m);
  const CVec& h = ch.h_bs_d2drx[m];
  double interference = ch.noise.d2d;
  for (const auto& w : sol.w) interference += std::norm(h.dot(w));
  for (int mp = 0; mp < sol.p.size(); ++mp)
    if (mp != m) interference += sol.p(mp) * std::norm(ch.h_d2dtx_d2drx(mp, m));
  return sol.p(m) * std::norm(ch.h_d2dtx_d2drx(m, m)) / interference;
}

/// Radar SINR for filter u: u^H A0 F A0^H u / u^H (B F B^H + Σ p_m h h^H + σ_r² I) u.
inline double radar_sinr(const ChannelSet& ch, const CMat& f, const RVec& p, const CVec& u) {
  const CMat a0 = target_response(ch);
  const CMat b = clutter_si_matrix(ch);
  const CVec a0u = a0.adjoint() * u;
  const CVec bu = b.adjoint() * u;
  const double num = quad_form(f, a0u);
  double den = quad_form(f, bu) + ch.noise.radar * u.squaredNorm();
  for (int m = 0; m < p.size(); ++m) den += p(m) * std::norm(ch.h_d2dtx_bs[m].dot(u));
  return std::max(0.0, num) / den;
}

inline double radar_sinr(const ChannelSet& ch, const Solution& sol) {
  return radar_sinr(ch, covariance(sol), sol.p, sol.u);
}

inline double rate_bits(double sinr) { return std::log2(1.0 + sinr); }

inline Metrics evaluate(const ChannelSet& ch, const Solution& sol) {
  Metrics out;
  for (int k = 0; k < ch.num_cus(); ++k) {
    out.sinr_cu.push_back(cu_sinr(ch, sol, k));
    out.rate_cu.push_back(rate_bits(out.sinr_cu.back()));
    out.sum_rate += out.rate_cu.back();
  }
  for (int m = 0; m < ch.num_pairs(); ++m) {
    out.sinr_d2d.push_back(d2d_sinr(ch, sol, m));
    out.rate_d2d.push_back(rate_bits(out.sinr_d2d.back()));
    out.sum_rate += out.rate_d2d.back();
  }
  out.radar_sinr = sol.u.size() > 0 ? radar_sinr(ch, sol) : 0.0;
  return out;
}

/// Sum rate from covariances and powers only (no receive filter needed).
inline double sum_rate(const ChannelSet& ch, const std::vector<CMat>& big_w, const RVec& p) {
  const CMat f = sum_covariance(big_w, ch.n_tx);
  double total = 0.0;
  for (int k = 0; k < ch.num_cus(); ++k) total += rate_bits(cu_sinr(ch, big_w, p, k));
  for (int m = 0; m < ch.num_pairs(); ++m) total += rate_bits(d2d_sinr(ch, f, p, m));
  return total;
}

struct Beampatterns {
  std::vector<double> angles_deg;
  std::vector<double> p1;  // transmit: a_t^H F a_t
  std::vector<double> p2;  // receive: |u^H a_r|² / u^H u
  std::vector<double> p3;  // cascade, normalized by u^H u
};

inline Beampatterns beampatterns(const ChannelSet& ch, const Solution& sol,
                                 const std::vector<double>& grid_deg) {
  const CMat f = covariance(sol);
  const double uu = sol.u.size() > 0 ? sol.u.squaredNorm() : 0.0;
  Beampatterns bp;
  bp.angles_deg = grid_deg;
  for (double th : grid_deg) {
    const CVec at = steering_vector(th, ch.n_tx);
    const double p1 = std::max(0.0, quad_form(f, at));
    double p2 = 0.0;
    if (uu > 0.0) p2 = std::norm(steering_vector(th, ch.n_rx).dot(sol.u)) / uu;
    bp.p1.push_back(p1);
    bp.p2.push_back(p2);
    bp.p3.push_back(p1 * p2);
  }
  return bp;
}

}  // namespace isacd2d
