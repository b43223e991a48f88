#pragma once

// Comparison schemes: matched-filter (MRT) and zero-forcing (ZF) transmit
// beams with fixed D2D power, sensing-only radar SINR maximization, and the
// SCA without its radar constraint (communication-only).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "isacd2d/conic/embed.hpp"
#include "isacd2d/conic/solve.hpp"
#include "isacd2d/errors.hpp"
#include "isacd2d/linalg.hpp"
#include "isacd2d/metrics.hpp"
#include "isacd2d/rxbeam.hpp"
#include "isacd2d/sca.hpp"
#include "isacd2d/scenario.hpp"

namespace isacd2d {

enum class BaselineKind { kMrt, kZf, kSensingOnly, kCommOnly };

inline const char* to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::kMrt: return "mrt";
    case BaselineKind::kZf: return "zf";
    case BaselineKind::kSensingOnly: return "sensing-only";
    case BaselineKind::kCommOnly: return "comm-only";
  }
  return "unknown";
}

namespace detail {

inline RVec full_powers(const Scenario& s) {
  RVec p(s.num_pairs());
  for (int m = 0; m < s.num_pairs(); ++m) p(m) = s.p_d2d_max[m];
  return p;
}

inline void attach_mvdr(const ChannelSet& ch, Solution& sol) {
  sol.u = mvdr(interference_matrix(ch, covariance(sol), sol.p), ch.target_angle_deg);
}

}  // namespace detail

/// w_k = √(P_BS/K)·h_k/‖h_k‖, p_m = P_m, MVDR receive filter.
inline Solution mrt(const ChannelSet& ch, const Scenario& s) {
  const int nk = ch.num_cus();
  if (nk < 1) throw InvalidScenario("mrt needs at least one CU");
  Solution sol;
  const double pk = s.p_bs_max / nk;
  for (const auto& h : ch.h_bs_cu) {
    const double n = h.norm();
    if (!(n > 0.0)) throw InvalidScenario("mrt: zero CU channel");
    sol.w.push_back(std::sqrt(pk) * h / n);
  }
  sol.p = detail::full_powers(s);
  detail::attach_mvdr(ch, sol);
  return sol;
}

/// P⊥ = I − H (H^H H)^{-1} H^H for the columns of `h`; pseudo-inverse when H^H H is singular.
inline CMat null_projector(const CMat& h, bool* rank_deficient = nullptr) {
  const Eigen::Index n = h.rows();
  if (h.cols() == 0) return CMat::Identity(n, n);
  Eigen::CompleteOrthogonalDecomposition<CMat> cod(h);
  const bool deficient = cod.rank() < h.cols();
  if (rank_deficient) *rank_deficient = deficient;
  CMat proj;
  if (!deficient) {
    const CMat gram = h.adjoint() * h;
    proj = h * gram.ldlt().solve(h.adjoint());
  } else {
    proj = h * cod.pseudoInverse();
  }
  return hermitian_part(CMat::Identity(n, n) - proj);
}

/// w_k ∝ P⊥_k h_k, where P⊥_k removes the other CUs' and all D2D-RX channels.
inline Solution zf(const ChannelSet& ch, const Scenario& s, std::vector<std::string>* warnings = nullptr) {
  const int nk = ch.num_cus(), nm = ch.num_pairs();
  if (nk < 1) throw InvalidScenario("zf needs at least one CU");
  Solution sol;
  const double pk = s.p_bs_max / nk;
  for (int k = 0; k < nk; ++k) {
    CMat h(ch.n_tx, nk - 1 + nm);
    int c = 0;
    for (int kp = 0; kp < nk; ++kp)
      if (kp != k) h.col(c++) = ch.h_bs_cu[kp];
    for (int m = 0; m < nm; ++m) h.col(c++) = ch.h_bs_d2drx[m];
    bool deficient = false;
    const CMat proj = null_projector(h, &deficient);
    if (deficient && warnings)
      warnings->push_back("zf: interference channels of CU " + std::to_string(k) +
                          " are rank deficient; used the pseudo-inverse projector");
    CVec d = proj * ch.h_bs_cu[k];
    const double n = d.norm();
    if (!(n > 1e-14 * ch.h_bs_cu[k].norm()))
      throw NumericalFailure("zf: CU channel lies in the span of the nulled channels");
    sol.w.push_back(std::sqrt(pk) * d / n);
  }
  sol.p = detail::full_powers(s);
  detail::attach_mvdr(ch, sol);
  return sol;
}

// ---------------------------------------------------------------------------
// Sensing-only.

struct SensingSettings {
  double bracket_width_db = 0.05;
  int max_bisections = 60;
  int max_sca_iters = 30;
  double sca_rel_tol = 1e-4;
  conic::ToleranceSet tolerances = [] {
    conic::ToleranceSet t;
    t.primal = t.dual = t.gap = 1e-7;
    return t;
  }();
};

struct SensingResult {
  Solution solution;
  CMat f;                      // optimized transmit covariance
  double model_sinr = 0.0;     // SINR_r* at f without the D2D term (the optimized quantity)
  double lower_db = 0.0;       // final bracket: attained
  double upper_db = 0.0;       // final bracket: not attained (or the clean-case bound)
  int bisections = 0;
  int subproblem_solves = 0;
  std::vector<std::string> notes;
};

namespace detail {

/// Phase-I SCA at threshold γ: minimize s ≥ 0 subject to |α0|²φ(F)(f̃(G) + s/σ_r²) ≥ γ,
/// tr F ≤ P_BS, re-linearizing f around each new F. Returns the first F whose exact
/// SINR (D2D term dropped) reaches γ.
inline std::optional<CMat> sensing_feasible(const ChannelSet& ch, const Scenario& s, double gamma, CMat f,
                                            const SensingSettings& st, int& solves) {
  const int nt = ch.n_tx;
  const RVec p0 = RVec::Zero(ch.num_pairs());
  const CVec at = steering_vector(ch.target_angle_deg, nt);
  const RMat phi_blk = 0.5 * conic::embed_complex(outer(at), 1e-6);
  const double c = gamma * ch.noise.radar / (std::norm(ch.target_amp) * s.p_bs_max);
  double prev_s = std::numeric_limits<double>::infinity();
  for (int it = 0; it < st.max_sca_iters; ++it) {
    const LinearizedF lf = linearize_f(interference_matrix(ch, f, p0, false), ch.target_angle_deg);
    conic::ConicProgram prog;
    const int blk = prog.add_psd_block(2 * nt);
    const int slack = prog.add_scalar(conic::ScalarKind::kNonneg);
    prog.add_inequality(conic::LinearExpr(1.0).add_block(blk, -0.5 * RMat::Identity(2 * nt, 2 * nt)));
    const AffineForm fa = lf.form(ch, 1, false);
    conic::LinearExpr psi = affine_to_expr(fa, {blk}, {}, s.p_bs_max, RVec(), ch.noise.radar);
    psi.add(slack, 1.0);
    conic::LinearExpr sum, diff;
    sum.add_block(blk, phi_blk);
    diff.add_block(blk, phi_blk);
    for (const auto& t : psi.scalars) {
      sum.add(t.first, t.second);
      diff.add(t.first, -t.second);
    }
    for (const auto& t : psi.blocks) {
      sum.add_block(t.first, t.second);
      diff.add_block(t.first, -t.second);
    }
    sum.add_constant(psi.constant);
    diff.add_constant(-psi.constant);
    prog.add_soc({std::move(sum), std::move(diff), conic::LinearExpr(2.0 * std::sqrt(c))});
    prog.set_objective(conic::LinearExpr().add(slack, 1.0));
    const conic::ConicSolution sol = conic::solve(prog, st.tolerances);
    ++solves;
    if (!sol.optimal()) return std::nullopt;

    CMat fn = s.p_bs_max * conic::extract_complex(sol.blocks[blk]);
    Eigen::SelfAdjointEigenSolver<CMat> es(fn);
    fn = hermitian_part(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                        es.eigenvectors().adjoint());
    const double tr = fn.trace().real();
    if (tr > s.p_bs_max) fn *= s.p_bs_max / tr;
    f = fn;
    if (optimal_radar_sinr(ch, f, p0, false) >= gamma) return f;
    const double sv = sol.scalars(slack);
    if (sv >= prev_s * (1.0 - st.sca_rel_tol)) return std::nullopt;
    prev_s = sv;
  }
  return std::nullopt;
}

}  // namespace detail

/// Maximizes SINR_r* over F ⪰ 0, tr F ≤ P_BS by bisection (in dB) on the threshold.
/// The D2D term is left out of G while optimizing; the returned metrics use p_m = P_m.
inline SensingResult sensing_only(const ChannelSet& ch, const Scenario& s, const SensingSettings& st = {}) {
  if (!(s.p_bs_max > 0.0)) throw InvalidScenario("sensing_only needs P_BS > 0");
  if (!(st.bracket_width_db > 0.0)) throw InvalidScenario("bracket width must be > 0");
  const int nt = ch.n_tx;
  const RVec p0 = RVec::Zero(ch.num_pairs());
  const CVec at = steering_vector(ch.target_angle_deg, nt);

  SensingResult r;
  CMat best = s.p_bs_max * outer(at);
  double lo = optimal_radar_sinr(ch, best, p0, false);
  const double hi_lin = std::norm(ch.target_amp) * s.p_bs_max / ch.noise.radar;
  r.lower_db = to_db(lo);
  r.upper_db = to_db(hi_lin);
  while (r.upper_db - r.lower_db >= st.bracket_width_db && r.bisections < st.max_bisections) {
    ++r.bisections;
    const double mid_db = 0.5 * (r.lower_db + r.upper_db);
    const auto f = detail::sensing_feasible(ch, s, from_db(mid_db), best, st, r.subproblem_solves);
    if (f) {
      best = *f;
      lo = optimal_radar_sinr(ch, best, p0, false);
      r.lower_db = std::max(mid_db, to_db(lo));
      if (r.lower_db > r.upper_db) r.upper_db = r.lower_db;
    } else {
      r.upper_db = mid_db;
    }
  }
  r.f = best;
  r.model_sinr = lo;
  r.solution.big_w = std::vector<CMat>(ch.num_cus(), best / static_cast<double>(ch.num_cus()));
  r.solution.p = detail::full_powers(s);
  detail::attach_mvdr(ch, r.solution);
  r.notes.push_back("sensing objective omits the D2D interference term; metrics use the full model with p_m = P_m");
  return r;
}

// ---------------------------------------------------------------------------
// Communication-only.

/// The SCA with the radar constraint removed. When `alt_start` is given (typically the
/// proposed scheme's final iterate) the run is repeated from it and the better sum rate kept.
inline RunReport comm_only(const ChannelSet& ch, const Scenario& s, ScaSettings settings = {},
                           const std::optional<Iterate>& alt_start = std::nullopt) {
  settings.radar_constraint = false;
  RunReport rep = sca_solve(ch, s, settings);
  if (alt_start) {
    RunReport alt = sca_solve(ch, s, settings, alt_start);
    if (alt.metrics.sum_rate > rep.metrics.sum_rate) {
      alt.warnings.push_back("comm-only: kept the run started from the supplied iterate");
      alt.wall_time_s += rep.wall_time_s;
      return alt;
    }
    rep.wall_time_s += alt.wall_time_s;
  }
  return rep;
}

}  // namespace isacd2d
