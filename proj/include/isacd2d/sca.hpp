#pragma once

// Successive convex approximation of the sum-rate problem under a radar SINR
// constraint. Each outer iteration linearizes the concave interference terms
// of the rates and the convex radar term f(G) = a_r^H G^{-1} a_r around the
// previous covariances, solves the resulting conic program over (W_k, p_m)
// with the rank-one constraint dropped, and finally extracts beamformers.
//
// Inside the conic program the variables are normalized: X_k = W_k / P_BS
// (complex, embedded as 2N_t real blocks) and q_m = p_m / P_m.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "isacd2d/conic/embed.hpp"
#include "isacd2d/conic/solve.hpp"
#include "isacd2d/errors.hpp"
#include "isacd2d/linalg.hpp"
#include "isacd2d/metrics.hpp"
#include "isacd2d/rxbeam.hpp"
#include "isacd2d/scenario.hpp"

namespace isacd2d {

inline constexpr double kLn2 = std::numbers::ln2;

/// value = Σ_k Re tr(C_k W_k) + Σ_m d_m p_m + c.
struct AffineForm {
  std::vector<CMat> w_coeff;
  RVec p_coeff;
  double constant = 0.0;

  double operator()(const std::vector<CMat>& big_w, const RVec& p) const {
    double v = constant;
    for (std::size_t k = 0; k < w_coeff.size(); ++k) v += (w_coeff[k] * big_w[k]).trace().real();
    if (p_coeff.size() > 0) v += p_coeff.dot(p);
    return v;
  }
};

// ---------------------------------------------------------------------------
// Exact interference terms.

/// Σ_{k'≠k} h_k^H W_k' h_k + Σ_m p_m |h_mk|² + σ_k².
inline double cu_interference(const ChannelSet& ch, const std::vector<CMat>& big_w, const RVec& p, int k) {
  double v = ch.noise.cu;
  for (int kp = 0; kp < static_cast<int>(big_w.size()); ++kp)
    if (kp != k) v += quad_form(big_w[kp], ch.h_bs_cu[k]);
  for (int m = 0; m < p.size(); ++m) v += p(m) * std::norm(ch.h_d2dtx_cu(m, k));
  return v;
}

/// h_m^H F h_m + Σ_{m'≠m} p_m' |h_m'm|² + σ_m².
inline double d2d_interference(const ChannelSet& ch, const std::vector<CMat>& big_w, const RVec& p, int m) {
  double v = ch.noise.d2d;
  for (const auto& w : big_w) v += quad_form(w, ch.h_bs_d2drx[m]);
  for (int mp = 0; mp < p.size(); ++mp)
    if (mp != m) v += p(mp) * std::norm(ch.h_d2dtx_d2drx(mp, m));
  return v;
}

/// log2 of the interference-plus-noise terms (the concave parts of the rates).
inline double cu_log_interference(const ChannelSet& ch, const std::vector<CMat>& big_w, const RVec& p, int k) {
  return std::log2(cu_interference(ch, big_w, p, k));
}
inline double d2d_log_interference(const ChannelSet& ch, const std::vector<CMat>& big_w, const RVec& p, int m) {
  return std::log2(d2d_interference(ch, big_w, p, m));
}

// ---------------------------------------------------------------------------
// Surrogates.

/// First-order expansion of f(G) = a^H G^{-1} a about G0:
/// f̃(G) = 2 f0 − v^H G v with v = G0^{-1} a, f0 = a^H v.
struct LinearizedF {
  CVec v;
  double f0 = 0.0;

  double operator()(const CMat& g) const { return 2.0 * f0 - quad_form(g, v); }

  /// The same functional composed with G(W, p); `include_d2d = false` drops the D2D term.
  AffineForm form(const ChannelSet& ch, int num_cus, bool include_d2d = true) const {
    AffineForm a;
    const CMat b = clutter_si_matrix(ch);
    const CVec bv = b.adjoint() * v;
    a.w_coeff.assign(num_cus, -outer(bv));
    a.p_coeff = RVec::Zero(ch.num_pairs());
    if (include_d2d)
      for (int m = 0; m < ch.num_pairs(); ++m) a.p_coeff(m) = -std::norm(ch.h_d2dtx_bs[m].dot(v));
    a.constant = 2.0 * f0 - ch.noise.radar * v.squaredNorm();
    return a;
  }
};

inline LinearizedF linearize_f(const InterferenceMatrix& g0, const CVec& a) {
  LinearizedF lf;
  lf.v = hermitian_solve(g0.g, a);
  lf.f0 = a.dot(lf.v).real();
  return lf;
}

inline LinearizedF linearize_f(const InterferenceMatrix& g0, double theta0_deg) {
  return linearize_f(g0, steering_vector(theta0_deg, static_cast<int>(g0.g.rows())));
}

/// Tangent upper bounds Ẽ (in bits) of the log2 interference terms.
struct RateBounds {
  std::vector<AffineForm> cu;
  std::vector<AffineForm> d2d;
};

inline RateBounds linearize_rate_terms(const ChannelSet& ch, const std::vector<CMat>& big_w, const RVec& p) {
  const int nk = ch.num_cus(), nm = ch.num_pairs();
  RateBounds rb;
  for (int k = 0; k < nk; ++k) {
    const double d0 = cu_interference(ch, big_w, p, k);
    const double s = 1.0 / (d0 * kLn2);
    AffineForm a;
    const CMat hh = outer(ch.h_bs_cu[k]);
    for (int kp = 0; kp < nk; ++kp) a.w_coeff.push_back(kp == k ? CMat::Zero(ch.n_tx, ch.n_tx) : CMat(s * hh));
    a.p_coeff = RVec(nm);
    for (int m = 0; m < nm; ++m) a.p_coeff(m) = s * std::norm(ch.h_d2dtx_cu(m, k));
    a.constant = std::log2(d0) - s * (d0 - ch.noise.cu);
    rb.cu.push_back(std::move(a));
  }
  for (int m = 0; m < nm; ++m) {
    const double d0 = d2d_interference(ch, big_w, p, m);
    const double s = 1.0 / (d0 * kLn2);
    AffineForm a;
    a.w_coeff.assign(nk, s * outer(ch.h_bs_d2drx[m]));
    a.p_coeff = RVec(nm);
    for (int mp = 0; mp < nm; ++mp) a.p_coeff(mp) = mp == m ? 0.0 : s * std::norm(ch.h_d2dtx_d2drx(mp, m));
    a.constant = std::log2(d0) - s * (d0 - ch.noise.d2d);
    rb.d2d.push_back(std::move(a));
  }
  return rb;
}

/// −Σ log2(signal + interference + noise) + Σ Ẽ. Equals −sum_rate at the expansion point
/// and upper-bounds it everywhere else.
inline double surrogate_objective(const ChannelSet& ch, const RateBounds& rb, const std::vector<CMat>& big_w,
                                  const RVec& p) {
  double v = 0.0;
  for (int k = 0; k < ch.num_cus(); ++k) {
    v -= std::log2(cu_interference(ch, big_w, p, k) + std::max(0.0, quad_form(big_w[k], ch.h_bs_cu[k])));
    v += rb.cu[k](big_w, p);
  }
  for (int m = 0; m < ch.num_pairs(); ++m) {
    v -= std::log2(d2d_interference(ch, big_w, p, m) + p(m) * std::norm(ch.h_d2dtx_d2drx(m, m)));
    v += rb.d2d[m](big_w, p);
  }
  return v;
}

// ---------------------------------------------------------------------------

/// One SCA iterate: covariances, powers and the interference matrix they induce.
struct Iterate {
  std::vector<CMat> big_w;
  RVec p;
  double objective = std::numeric_limits<double>::quiet_NaN();  // surrogate value, bits/s/Hz (negated)
  InterferenceMatrix g_prev;
};

inline Iterate make_iterate(const ChannelSet& ch, std::vector<CMat> big_w, RVec p, bool include_d2d = true) {
  Iterate it;
  it.big_w = std::move(big_w);
  it.p = std::move(p);
  it.g_prev = interference_matrix(ch, sum_covariance(it.big_w, ch.n_tx), it.p, include_d2d);
  return it;
}

enum class LogHandling { kNative, kCuttingPlane };

inline const char* to_string(LogHandling h) { return h == LogHandling::kNative ? "native" : "cutting-plane"; }

struct ScaSettings {
  int max_iters = 30;
  double rel_tol = 1e-4;
  int randomization_samples = 100;
  double rank_ratio_threshold = 1e5;
  std::uint64_t randomization_seed = 0;
  double feasibility_rel_tol = 1e-4;  // slack when screening extracted beamformers against γ_r
  double relaxed_factor = 100.0;      // a stalled subproblem is still used if its residuals meet this × tolerances
  conic::ToleranceSet tolerances = [] {
    conic::ToleranceSet t;
    t.primal = t.dual = t.gap = 1e-7;
    return t;
  }();
  conic::ComplexStructure structure = conic::ComplexStructure::kProjected;
  LogHandling log_handling = LogHandling::kNative;
  bool radar_constraint = true;  // false gives the communication-only scheme

  void validate() const {
    if (max_iters < 1) throw InvalidScenario("max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw InvalidScenario("rel_tol must be > 0");
    if (randomization_samples < 1) throw InvalidScenario("randomization_samples must be >= 1");
    if (!(rank_ratio_threshold >= 1.0)) throw InvalidScenario("rank_ratio_threshold must be >= 1");
    if (!(relaxed_factor >= 1.0)) throw InvalidScenario("relaxed_factor must be >= 1");
  }
};

struct SubproblemOptions {
  bool radar = true;
  conic::ComplexStructure structure = conic::ComplexStructure::kProjected;
};

/// Conic program for one SCA step plus the bookkeeping needed to decode it.
struct Subproblem {
  conic::ConicProgram program;
  std::vector<int> blocks;  // one embedded block per CU
  std::vector<int> powers;  // one normalized power per pair
  double p_bs = 0.0;
  RVec p_max;
  int n_tx = 0;
  bool radar_active = false;
  RateBounds bounds;
  LinearizedF lin_f;
  double radar_c = 0.0;  // φ'ψ ≥ c with φ' = a_t^H(ΣX)a_t, ψ = σ_r² f̃
};

namespace detail {

inline conic::LinearExpr affine_to_expr(const AffineForm& a, const std::vector<int>& blocks,
                                        const std::vector<int>& powers, double p_bs, const RVec& p_max,
                                        double scale) {
  conic::LinearExpr e(scale * a.constant);
  for (std::size_t k = 0; k < blocks.size(); ++k)
    if (a.w_coeff[k].cwiseAbs().maxCoeff() > 0.0)
      e.add_block(blocks[k], 0.5 * scale * p_bs * conic::embed_complex(hermitian_part(a.w_coeff[k]), 1e-6));
  for (std::size_t m = 0; m < powers.size(); ++m)
    if (a.p_coeff(m) != 0.0) e.add(powers[m], scale * p_max(m) * a.p_coeff(m));
  return e;
}

}  // namespace detail

inline Subproblem build_subproblem(const Iterate& prev, const ChannelSet& ch, const Scenario& s,
                                   const SubproblemOptions& opt = {}) {
  const int nk = ch.num_cus(), nm = ch.num_pairs(), nt = ch.n_tx;
  if (static_cast<int>(prev.big_w.size()) != nk || prev.p.size() != nm || s.num_cus() != nk ||
      s.num_pairs() != nm || s.array.n_tx != nt)
    throw ConstructionError("iterate, channels and scenario disagree on dimensions");
  for (const auto& w : prev.big_w)
    if (w.rows() != nt || w.cols() != nt) throw ConstructionError("covariance has wrong dimension");

  Subproblem sp;
  sp.n_tx = nt;
  sp.p_bs = s.p_bs_max;
  sp.p_max = Eigen::Map<const RVec>(s.p_d2d_max.data(), nm);
  auto& prog = sp.program;
  for (int k = 0; k < nk; ++k) sp.blocks.push_back(prog.add_psd_block(2 * nt));
  for (int m = 0; m < nm; ++m) sp.powers.push_back(prog.add_scalar(conic::ScalarKind::kNonneg));
  if (opt.structure == conic::ComplexStructure::kExplicit)
    for (int b : sp.blocks) conic::add_structure_constraints(prog, b);

  // Σ tr X_k ≤ 1 and q_m ≤ 1.
  {
    conic::LinearExpr e(1.0);
    for (int b : sp.blocks) e.add_block(b, -0.5 * RMat::Identity(2 * nt, 2 * nt));
    prog.add_inequality(std::move(e));
  }
  for (int q : sp.powers) prog.add_inequality(conic::LinearExpr(1.0).add(q, -1.0));

  // Objective: −Σ log2(all) + Σ Ẽ; log arguments normalized by their noise floor.
  sp.bounds = linearize_rate_terms(ch, prev.big_w, prev.p);
  conic::LinearExpr obj;
  const double w_log = 1.0 / kLn2;
  for (int k = 0; k < nk; ++k) {
    const double inv = 1.0 / ch.noise.cu;
    conic::LinearExpr z(1.0);
    const RMat hh = 0.5 * sp.p_bs * inv * conic::embed_complex(outer(ch.h_bs_cu[k]), 1e-6);
    for (int b : sp.blocks) z.add_block(b, hh);
    for (int m = 0; m < nm; ++m) {
      const double c = sp.p_max(m) * std::norm(ch.h_d2dtx_cu(m, k)) * inv;
      if (c != 0.0) z.add(sp.powers[m], c);
    }
    prog.add_log_term(w_log, std::move(z));
    obj.add_constant(-std::log2(ch.noise.cu));
    const conic::LinearExpr e = detail::affine_to_expr(sp.bounds.cu[k], sp.blocks, sp.powers, sp.p_bs, sp.p_max, 1.0);
    obj.scalars.insert(obj.scalars.end(), e.scalars.begin(), e.scalars.end());
    obj.blocks.insert(obj.blocks.end(), e.blocks.begin(), e.blocks.end());
    obj.add_constant(e.constant);
  }
  for (int m = 0; m < nm; ++m) {
    const double inv = 1.0 / ch.noise.d2d;
    conic::LinearExpr z(1.0);
    const RMat hh = 0.5 * sp.p_bs * inv * conic::embed_complex(outer(ch.h_bs_d2drx[m]), 1e-6);
    for (int b : sp.blocks) z.add_block(b, hh);
    for (int mp = 0; mp < nm; ++mp) {
      const double c = sp.p_max(mp) * std::norm(ch.h_d2dtx_d2drx(mp, m)) * inv;
      if (c != 0.0) z.add(sp.powers[mp], c);
    }
    prog.add_log_term(w_log, std::move(z));
    obj.add_constant(-std::log2(ch.noise.d2d));
    const conic::LinearExpr e = detail::affine_to_expr(sp.bounds.d2d[m], sp.blocks, sp.powers, sp.p_bs, sp.p_max, 1.0);
    obj.scalars.insert(obj.scalars.end(), e.scalars.begin(), e.scalars.end());
    obj.blocks.insert(obj.blocks.end(), e.blocks.begin(), e.blocks.end());
    obj.add_constant(e.constant);
  }
  prog.set_objective(std::move(obj));

  // Radar: |α0|² φ f̃ ≥ γ_r as the hyperbolic cone (φ'+ψ, φ'−ψ, 2√c) ∈ Q³.
  sp.lin_f = linearize_f(prev.g_prev, ch.target_angle_deg);
  sp.radar_active = opt.radar && s.gamma_r > 0.0;
  if (sp.radar_active) {
    const CVec at = steering_vector(ch.target_angle_deg, nt);
    const RMat phi_blk = 0.5 * conic::embed_complex(outer(at), 1e-6);
    const AffineForm fa = sp.lin_f.form(ch, nk, true);
    // ψ = σ_r² f̃ expressed in (X, q).
    conic::LinearExpr psi =
        detail::affine_to_expr(fa, sp.blocks, sp.powers, sp.p_bs, sp.p_max, ch.noise.radar);
    // φ'ψ ≥ c is unchanged under (λφ', ψ/λ); λ balances the two sides' coefficient sizes.
    double psi_max = std::abs(psi.constant);
    for (const auto& t : psi.scalars) psi_max = std::max(psi_max, std::abs(t.second));
    for (const auto& t : psi.blocks) psi_max = std::max(psi_max, t.second.cwiseAbs().maxCoeff());
    const double lambda = psi_max > 0.0 ? std::sqrt(psi_max / phi_blk.cwiseAbs().maxCoeff()) : 1.0;
    for (auto& t : psi.scalars) t.second /= lambda;
    for (auto& t : psi.blocks) t.second /= lambda;
    psi.constant /= lambda;
    conic::LinearExpr phi;
    for (int b : sp.blocks) phi.add_block(b, lambda * phi_blk);
    sp.radar_c = s.gamma_r * ch.noise.radar / (std::norm(ch.target_amp) * sp.p_bs);
    conic::LinearExpr sum = phi, diff = phi;
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
    prog.add_soc({std::move(sum), std::move(diff), conic::LinearExpr(2.0 * std::sqrt(sp.radar_c))});
  }
  return sp;
}

/// Covariances and powers (watts) from a subproblem solution.
inline std::pair<std::vector<CMat>, RVec> decode(const Subproblem& sp, const conic::ConicSolution& sol) {
  std::vector<CMat> big_w;
  double total = 0.0;
  for (int b : sp.blocks) {
    CMat w = sp.p_bs * conic::extract_complex(sol.blocks[b]);
    Eigen::SelfAdjointEigenSolver<CMat> es(w);
    RVec ev = es.eigenvalues().cwiseMax(0.0);
    w = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    w = hermitian_part(w);
    total += w.trace().real();
    big_w.push_back(std::move(w));
  }
  if (total > sp.p_bs)
    for (auto& w : big_w) w *= sp.p_bs / total;
  RVec p(sp.powers.size());
  for (std::size_t m = 0; m < sp.powers.size(); ++m)
    p(m) = sp.p_max(m) * std::clamp(sol.scalars(sp.powers[m]), 0.0, 1.0);
  return {std::move(big_w), std::move(p)};
}

// ---------------------------------------------------------------------------
// Rank-one extraction.

/// √λ1·v1 with the first component of magnitude > 1e-12 rotated to real positive.
inline CVec principal_component(const CMat& w) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(w));
  const Eigen::Index n = w.rows();
  CVec v = es.eigenvectors().col(n - 1) * std::sqrt(std::max(0.0, es.eigenvalues()(n - 1)));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(v(i)) > 1e-12) {
      v *= std::conj(v(i)) / std::abs(v(i));
      break;
    }
  }
  return v;
}

struct ExtractionContext {
  double gamma_r = 0.0;  // linear; 0 disables the radar screen
  RVec p;
  double rank_ratio_threshold = 1e5;
  int samples = 100;
  std::uint64_t seed = 0;
  double feasibility_rel_tol = 1e-4;
};

struct Extraction {
  std::vector<CVec> w;
  std::vector<double> rank_ratios;
  bool randomized = false;
  double sum_rate = 0.0;
  double radar_sinr = 0.0;
};

/// Beamformers from covariances: EVD where λ1/λ2 exceeds the threshold, Gaussian
/// randomization otherwise (candidate 0 is the EVD set; best feasible sum rate kept).
inline Extraction extract_rank_one(const std::vector<CMat>& big_w, const ChannelSet& ch, const ExtractionContext& ctx) {
  Extraction ex;
  const int nk = static_cast<int>(big_w.size());
  std::vector<CVec> evd;
  std::vector<bool> tight;
  bool all_tight = true;
  for (const auto& w : big_w) {
    ex.rank_ratios.push_back(rank_one_ratio(w));
    evd.push_back(principal_component(w));
    tight.push_back(ex.rank_ratios.back() > ctx.rank_ratio_threshold);
    all_tight = all_tight && tight.back();
  }
  auto score = [&](const std::vector<CVec>& ws, double& rate, double& radar) {
    Solution sol;
    sol.w = ws;
    sol.p = ctx.p;
    const CMat f = covariance(sol);
    radar = optimal_radar_sinr(ch, f, ctx.p);
    rate = evaluate(ch, sol).sum_rate;
    return ctx.gamma_r <= 0.0 || radar >= ctx.gamma_r * (1.0 - ctx.feasibility_rel_tol);
  };
  if (all_tight) {
    ex.w = evd;
    score(ex.w, ex.sum_rate, ex.radar_sinr);
    return ex;
  }
  ex.randomized = true;
  Rng rng(ctx.seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  std::vector<Eigen::SelfAdjointEigenSolver<CMat>> eig;
  for (const auto& w : big_w) eig.emplace_back(hermitian_part(w));
  bool found = false;
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s <= ctx.samples; ++s) {
    std::vector<CVec> cand = evd;
    if (s > 0) {
      for (int k = 0; k < nk; ++k) {
        if (tight[k]) continue;
        const auto& es = eig[k];
        const Eigen::Index n = big_w[k].rows();
        CVec r(n);
        for (Eigen::Index i = 0; i < n; ++i) r(i) = cd(nd(rng), nd(rng));
        CVec xi = es.eigenvectors() * (es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<cd>().asDiagonal() * r);
        const double nrm2 = xi.squaredNorm();
        if (nrm2 > 0.0) xi *= std::sqrt(big_w[k].trace().real() / nrm2);
        cand[k] = xi;
      }
    }
    double rate = 0.0, radar = 0.0;
    if (score(cand, rate, radar) && rate > best) {
      best = rate;
      found = true;
      ex.w = cand;
      ex.sum_rate = rate;
      ex.radar_sinr = radar;
    }
  }
  if (!found) throw RandomizationFailure("every randomized beamformer candidate violates the radar constraint");
  return ex;
}

// ---------------------------------------------------------------------------

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;   // surrogate value at the accepted point (negated bits/s/Hz)
  double sum_rate = 0.0;    // exact sum rate of the accepted covariances
  double radar_sinr = 0.0;  // SINR_r* of the accepted covariances
  std::string conic_status;
  int conic_iterations = 0;
  conic::KktResiduals residuals;
  std::vector<double> rank_ratios;
  bool kept_previous = false;
};

struct RunReport {
  std::string scheme = "proposed";
  std::vector<IterationRecord> iterations;
  Iterate final_iterate;
  Solution solution;
  Metrics metrics;
  std::vector<double> rank_ratios;
  bool converged = false;
  bool randomized = false;
  std::string log_handling = "native";
  std::string status = "ok";
  std::vector<std::string> warnings;
  double wall_time_s = 0.0;

  std::vector<double> objective_trace() const {
    std::vector<double> t;
    for (const auto& r : iterations) t.push_back(r.objective);
    return t;
  }
};

namespace detail {

inline conic::ConicSolution run_conic(const conic::ConicProgram& p, const ScaSettings& st) {
  return st.log_handling == LogHandling::kNative ? conic::solve(p, st.tolerances)
                                                 : conic::solve_with_cuts(p, st.tolerances);
}

/// Residuals of a non-optimal solve (its best point) within `factor` × the tolerances.
inline bool near_optimal(const conic::ConicSolution& cs, const conic::ToleranceSet& tol, double factor) {
  if (cs.status != conic::SolveStatus::kNumericalFailure && cs.status != conic::SolveStatus::kMaxIterations)
    return false;
  const auto& r = cs.residuals;
  return r.primal_rel <= factor * tol.primal && r.dual_rel <= factor * tol.dual && r.gap_rel <= factor * tol.gap;
}

inline Iterate default_start(const ChannelSet& ch, const Scenario& s) {
  const int nk = ch.num_cus();
  std::vector<CMat> w;
  for (int k = 0; k < nk; ++k) {
    const CVec h = ch.h_bs_cu[k].normalized();
    w.push_back((s.p_bs_max / nk) * outer(h));
  }
  RVec p(ch.num_pairs());
  for (int m = 0; m < ch.num_pairs(); ++m) p(m) = 0.5 * s.p_d2d_max[m];
  return make_iterate(ch, std::move(w), std::move(p));
}

/// 50/50 trace blend of each W_k with (P_BS/K) a_t a_t^H.
inline Iterate blended_start(const ChannelSet& ch, const Scenario& s, const Iterate& base) {
  const CVec at = steering_vector(ch.target_angle_deg, ch.n_tx);
  const int nk = ch.num_cus();
  std::vector<CMat> w;
  for (int k = 0; k < nk; ++k) w.push_back(0.5 * base.big_w[k] + 0.5 * (s.p_bs_max / nk) * outer(at));
  return make_iterate(ch, std::move(w), base.p);
}

}  // namespace detail

inline RunReport sca_solve(const ChannelSet& ch, const Scenario& s, const ScaSettings& settings = {},
                           const std::optional<Iterate>& init = std::nullopt) {
  settings.validate();
  s.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  rep.scheme = settings.radar_constraint ? "proposed" : "comm-only";
  rep.log_handling = to_string(settings.log_handling);
  SubproblemOptions opt;
  opt.radar = settings.radar_constraint;
  opt.structure = settings.structure;

  Iterate cur = init ? make_iterate(ch, init->big_w, init->p) : detail::default_start(ch, s);
  double prev_obj = std::numeric_limits<double>::quiet_NaN();

  for (int t = 1; t <= settings.max_iters; ++t) {
    Subproblem sp = build_subproblem(cur, ch, s, opt);
    conic::ConicSolution cs = detail::run_conic(sp.program, settings);
    if (t == 1 && !cs.optimal() && !init && !detail::near_optimal(cs, settings.tolerances, settings.relaxed_factor)) {
      rep.warnings.push_back(std::string("first subproblem ") + conic::to_string(cs.status) +
                             " from the MRT-shaped start; retried with a target-blended start");
      cur = detail::blended_start(ch, s, cur);
      sp = build_subproblem(cur, ch, s, opt);
      cs = detail::run_conic(sp.program, settings);
    }
    const bool relaxed = !cs.optimal() && detail::near_optimal(cs, settings.tolerances, settings.relaxed_factor);
    if (relaxed)
      rep.warnings.push_back("iteration " + std::to_string(t) + ": conic status " + conic::to_string(cs.status) +
                             "; used its best point (within the relaxed tolerances)");
    if (!cs.optimal() && !relaxed) {
      if (t == 1) {
        if (cs.status == conic::SolveStatus::kPrimalInfeasible)
          throw InfeasibleRadarConstraint("radar SINR threshold is unattainable from the SCA starting points");
        throw SolverFailure("SCA subproblem solve failed", conic::to_string(cs.status));
      }
      rep.warnings.push_back("iteration " + std::to_string(t) + ": conic status " + conic::to_string(cs.status) +
                             "; kept the previous iterate");
      rep.status = "solver-stalled";
      break;
    }
    auto [big_w, p] = decode(sp, cs);
    IterationRecord rec;
    rec.iteration = t;
    rec.conic_status = conic::to_string(cs.status);
    rec.conic_iterations = cs.iterations;
    rec.residuals = cs.residuals;
    double obj = surrogate_objective(ch, sp.bounds, big_w, p);
    if (t > 1) {
      const double prev_point = -sum_rate(ch, cur.big_w, cur.p);  // surrogate t at the previous point
      if (obj > prev_point) {
        big_w = cur.big_w;
        p = cur.p;
        obj = prev_point;
        rec.kept_previous = true;
      }
    }
    cur = make_iterate(ch, std::move(big_w), std::move(p));
    cur.objective = obj;
    rec.objective = obj;
    rec.sum_rate = sum_rate(ch, cur.big_w, cur.p);
    rec.radar_sinr = optimal_radar_sinr(ch, sum_covariance(cur.big_w, ch.n_tx), cur.p);
    for (const auto& w : cur.big_w) rec.rank_ratios.push_back(rank_one_ratio(w));
    rep.iterations.push_back(rec);
    if (t > 1 && std::abs(obj - prev_obj) <= settings.rel_tol * std::max(std::abs(prev_obj), 1e-12)) {
      rep.converged = true;
      break;
    }
    prev_obj = obj;
  }

  rep.final_iterate = cur;
  ExtractionContext ctx;
  ctx.gamma_r = settings.radar_constraint ? s.gamma_r : 0.0;
  ctx.p = cur.p;
  ctx.rank_ratio_threshold = settings.rank_ratio_threshold;
  ctx.samples = settings.randomization_samples;
  ctx.seed = settings.randomization_seed;
  ctx.feasibility_rel_tol = settings.feasibility_rel_tol;
  Extraction ex;
  try {
    ex = extract_rank_one(cur.big_w, ch, ctx);
  } catch (const RandomizationFailure& e) {
    ctx.gamma_r = 0.0;
    ctx.samples = 0;
    ex = extract_rank_one(cur.big_w, ch, ctx);
    rep.warnings.push_back(std::string(e.what()) + "; fell back to the principal eigenvectors");
  }
  rep.rank_ratios = ex.rank_ratios;
  rep.randomized = ex.randomized;
  rep.solution.w = ex.w;
  rep.solution.p = cur.p;
  rep.solution.u = mvdr(interference_matrix(ch, covariance(rep.solution), cur.p), ch.target_angle_deg);
  rep.metrics = evaluate(ch, rep.solution);
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------

/// Worst-case interior-point operation count for one subproblem: l = K N_t² + M variables,
/// 2M+1 size-1, K size-N_t and one size-2 semidefinite constraints, times ln(1/ε) and the
/// number of outer iterations.
inline double complexity_estimate(int num_cus, int n_tx, int num_pairs, double eps, int outer_iterations = 1) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidScenario("eps must lie in (0, 1)");
  const double k = num_cus, n = n_tx, m = num_pairs;
  const double l = k * n * n + m;
  const double mu = 2.0 * m + 3.0 + k * n;
  const double sum_sq = 5.0 + 2.0 * m + k * n * n;
  const double sum_cube = 9.0 + 2.0 * m + k * n * n * n;
  return outer_iterations * std::sqrt(mu) * (l * l * sum_sq + l * sum_cube + l * l * l) * std::log(1.0 / eps);
}

}  // namespace isacd2d
