#include <gtest/gtest.h>

#include <array>
#include <random>

#include "isacd2d/sca.hpp"
#include "test_util.hpp"

using namespace isacd2d;

namespace {

struct Point {
  std::vector<CMat> w;
  RVec p;
};

/// Random feasible covariances and powers for `d`.
Point random_point(const fixture::Desk& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point pt;
  const int nk = d.ch.num_cus();
  std::vector<double> share(nk);
  double tot = 0.0;
  for (auto& s : share) tot += (s = u(rng) + 1e-3);
  const double budget = d.s.p_bs_max * u(rng);
  std::uniform_int_distribution<int> rk(1, d.ch.n_tx);
  for (int k = 0; k < nk; ++k) pt.w.push_back(fixture::random_psd(d.ch.n_tx, rk(rng), budget * share[k] / tot, rng));
  pt.p = RVec(d.ch.num_pairs());
  for (int m = 0; m < pt.p.size(); ++m) pt.p(m) = d.s.p_d2d_max[m] * u(rng);
  return pt;
}

double f_exact(const ChannelSet& ch, const Point& pt) {
  return inverse_quad(interference_matrix(ch, sum_covariance(pt.w, ch.n_tx), pt.p),
                      steering_vector(ch.target_angle_deg, ch.n_rx));
}

}  // namespace

// ---------------------------------------------------------------------------
// f̃

TEST(LinearizeF, HandExample) {
  const InterferenceMatrix g0{CMat::Identity(3, 3)};
  const CVec a = steering_vector(10.0, 3);
  const LinearizedF lf = linearize_f(g0, a);
  EXPECT_NEAR(lf.f0, 1.0, 1e-15);
  EXPECT_NEAR(lf(2.0 * CMat::Identity(3, 3)), 0.0, 1e-15);
  EXPECT_NEAR(inverse_quad(InterferenceMatrix{2.0 * CMat::Identity(3, 3)}, a), 0.5, 1e-15);
}

TEST(LinearizeF, TangencyBoundAndDerivative) {
  const auto d = fixture::desk(8, 1);
  std::mt19937_64 rng(1);
  const Point p0 = random_point(d, rng);
  const InterferenceMatrix g0 = interference_matrix(d.ch, sum_covariance(p0.w, 8), p0.p);
  const LinearizedF lf = linearize_f(g0, 0.0);
  const AffineForm form = lf.form(d.ch, 2);
  const double f0 = f_exact(d.ch, p0);
  EXPECT_NEAR(form(p0.w, p0.p), f0, 1e-10 * f0);
  EXPECT_NEAR(lf(g0.g), f0, 1e-10 * f0);

  for (int t = 0; t < 100; ++t) {
    const Point q = random_point(d, rng);
    const double f = f_exact(d.ch, q);
    EXPECT_LE(form(q.w, q.p), f + 1e-10 * f0);
  }

  for (int t = 0; t < 10; ++t) {
    const Point dir = random_point(d, rng);
    const double h = 1e-5;
    auto at = [&](double s) {
      Point q = p0;
      for (int k = 0; k < 2; ++k) q.w[k] += s * dir.w[k];
      q.p += s * dir.p;
      return q;
    };
    const double fd = (f_exact(d.ch, at(h)) - f_exact(d.ch, at(-h))) / (2.0 * h);
    const double an = form(at(1.0).w, at(1.0).p) - form(p0.w, p0.p);
    EXPECT_NEAR(an, fd, 1e-6 * std::abs(fd));
  }
}

// ---------------------------------------------------------------------------
// Ẽ

TEST(RateBounds, TangencyBoundAndPowerGradient) {
  const auto d = fixture::desk(8, 2);
  std::mt19937_64 rng(2);
  const Point p0 = random_point(d, rng);
  const RateBounds rb = linearize_rate_terms(d.ch, p0.w, p0.p);
  for (int k = 0; k < 2; ++k)
    EXPECT_NEAR(rb.cu[k](p0.w, p0.p), cu_log_interference(d.ch, p0.w, p0.p, k), 1e-12);
  for (int m = 0; m < 2; ++m)
    EXPECT_NEAR(rb.d2d[m](p0.w, p0.p), d2d_log_interference(d.ch, p0.w, p0.p, m), 1e-12);
  EXPECT_NEAR(surrogate_objective(d.ch, rb, p0.w, p0.p), -sum_rate(d.ch, p0.w, p0.p), 1e-10);

  for (int t = 0; t < 100; ++t) {
    const Point q = random_point(d, rng);
    for (int k = 0; k < 2; ++k) EXPECT_GE(rb.cu[k](q.w, q.p) - cu_log_interference(d.ch, q.w, q.p, k), -1e-10);
    for (int m = 0; m < 2; ++m) EXPECT_GE(rb.d2d[m](q.w, q.p) - d2d_log_interference(d.ch, q.w, q.p, m), -1e-10);
    EXPECT_GE(surrogate_objective(d.ch, rb, q.w, q.p), -sum_rate(d.ch, q.w, q.p) - 1e-10);
  }

  for (int j = 0; j < 2; ++j) {
    const double h = 1e-6 * d.s.p_d2d_max[j];
    Point a = p0, b = p0;
    a.p(j) += h;
    b.p(j) -= h;
    for (int k = 0; k < 2; ++k) {
      const double fd = (cu_log_interference(d.ch, a.w, a.p, k) - cu_log_interference(d.ch, b.w, b.p, k)) / (2 * h);
      EXPECT_NEAR(rb.cu[k].p_coeff(j), fd, 1e-6 * std::abs(fd));
    }
    const int m = 1 - j;
    const double fd = (d2d_log_interference(d.ch, a.w, a.p, m) - d2d_log_interference(d.ch, b.w, b.p, m)) / (2 * h);
    EXPECT_NEAR(rb.d2d[m].p_coeff(j), fd, 1e-6 * std::abs(fd));
  }
}

// ---------------------------------------------------------------------------
// Subproblem

TEST(Subproblem, VariableCount) {
  const auto d = fixture::desk(4, 0);
  const Iterate it = detail::default_start(d.ch, d.s);
  const Subproblem sp = build_subproblem(it, d.ch, d.s);
  int l = 0;
  for (int b : sp.blocks) l += (sp.program.psd_dims()[b] / 2) * (sp.program.psd_dims()[b] / 2);
  l += static_cast<int>(sp.powers.size());
  EXPECT_EQ(l, 34);
  EXPECT_TRUE(sp.radar_active);
  EXPECT_EQ(sp.program.socs().size(), 1u);
  EXPECT_EQ(sp.program.log_terms().size(), 4u);
}

TEST(Subproblem, ZeroThresholdDropsRadarConstraint) {
  auto d = fixture::desk(4, 0);
  d.s.gamma_r = 0.0;
  const Iterate it = detail::default_start(d.ch, d.s);
  const Subproblem a = build_subproblem(it, d.ch, d.s);
  SubproblemOptions comm;
  comm.radar = false;
  const Subproblem b = build_subproblem(it, d.ch, d.s, comm);
  EXPECT_FALSE(a.radar_active);
  EXPECT_TRUE(a.program.socs().empty());
  const auto sa = conic::solve(a.program), sb = conic::solve(b.program);
  ASSERT_TRUE(sa.optimal() && sb.optimal());
  EXPECT_NEAR(sa.primal_objective, sb.primal_objective, 1e-9);
}

TEST(Subproblem, RejectsMismatchedDimensions) {
  const auto d = fixture::desk(4, 0);
  Iterate it = detail::default_start(d.ch, d.s);
  it.big_w.pop_back();
  EXPECT_THROW(build_subproblem(it, d.ch, d.s), ConstructionError);
  Iterate jt = detail::default_start(d.ch, d.s);
  jt.big_w[0] = CMat::Zero(3, 3);
  EXPECT_THROW(build_subproblem(jt, d.ch, d.s), ConstructionError);
}

TEST(Subproblem, SurrogateFeasibleImpliesRadarFeasible) {
  const auto d = fixture::desk(8, 4, 5.0);
  const Iterate it = detail::default_start(d.ch, d.s);
  const Subproblem sp = build_subproblem(it, d.ch, d.s);
  const auto sol = conic::solve(sp.program);
  ASSERT_TRUE(sol.optimal());
  const auto [w_opt, p_opt] = decode(sp, sol);
  const AffineForm fa = sp.lin_f.form(d.ch, 2);
  const CVec at = steering_vector(0.0, 8);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int t = 0; t < 20000 && checked < 100; ++t) {
    Point q = random_point(d, rng);
    const double mix = std::sqrt(u(rng));
    for (int k = 0; k < 2; ++k) q.w[k] = mix * w_opt[k] + (1.0 - mix) * q.w[k];
    q.p = mix * p_opt + (1.0 - mix) * q.p;
    const double phi = quad_form(sum_covariance(q.w, 8), at);
    if (std::norm(d.ch.target_amp) * phi * fa(q.w, q.p) < d.s.gamma_r) continue;
    ++checked;
    EXPECT_GE(optimal_radar_sinr(d.ch, sum_covariance(q.w, 8), q.p), d.s.gamma_r * (1.0 - 1e-6));
  }
  EXPECT_EQ(checked, 100);
}

TEST(Subproblem, TinyInstanceMatchesGridSearch) {
  // N_t = 2, one CU, one pair, no clutter. Every 2x2 PSD covariance is
  // W = t [[x, ρ√(x(1-x)) e^{jφ}], [·, 1-x]], so a zooming grid over
  // (t, x, ρ, φ, p) searches the whole feasible set of the subproblem.
  auto d = fixture::tiny(2, 1, 1, false, 1);
  d.s.gamma_r = db_to_linear(-5.0);
  const Iterate it = detail::default_start(d.ch, d.s);
  const Subproblem sp = build_subproblem(it, d.ch, d.s);
  ASSERT_TRUE(sp.radar_active);
  const auto sol = conic::solve(sp.program);
  ASSERT_TRUE(sol.optimal());
  const auto [w_opt, p_opt] = decode(sp, sol);
  const double opt = surrogate_objective(d.ch, sp.bounds, w_opt, p_opt);

  const AffineForm fa = sp.lin_f.form(d.ch, 1);
  const CVec at = steering_vector(d.ch.target_angle_deg, 2);
  const double amp2 = std::norm(d.ch.target_amp);
  auto eval = [&](const std::array<double, 5>& x) {
    const double t = d.s.p_bs_max * x[0];
    const cd off = t * x[2] * std::sqrt(x[1] * (1.0 - x[1])) * std::polar(1.0, x[3]);
    CMat w(2, 2);
    w << t * x[1], off, std::conj(off), t * (1.0 - x[1]);
    const std::vector<CMat> big{w};
    const RVec p = RVec::Constant(1, x[4] * d.s.p_d2d_max[0]);
    if (amp2 * quad_form(w, at) * fa(big, p) < d.s.gamma_r) return std::numeric_limits<double>::infinity();
    return surrogate_objective(d.ch, sp.bounds, big, p);
  };
  std::array<double, 5> lo{0.0, 0.0, 0.0, -kPi, 0.0}, hi{1.0, 1.0, 1.0, kPi, 1.0}, arg{};
  const std::array<bool, 5> clamp{true, true, true, false, true};
  double best = std::numeric_limits<double>::infinity();
  const int n = 10;
  for (int round = 0; round < 14; ++round) {
    std::array<int, 5> i{};
    for (;;) {
      std::array<double, 5> x;
      for (int k = 0; k < 5; ++k) x[k] = lo[k] + (hi[k] - lo[k]) * i[k] / n;
      const double v = eval(x);
      if (v < best) {
        best = v;
        arg = x;
      }
      int k = 0;
      while (k < 5 && ++i[k] > n) i[k++] = 0;
      if (k == 5) break;
    }
    for (int k = 0; k < 5; ++k) {
      const double half = 0.25 * (hi[k] - lo[k]);
      lo[k] = clamp[k] ? std::max(0.0, arg[k] - half) : arg[k] - half;
      hi[k] = clamp[k] ? std::min(1.0, arg[k] + half) : arg[k] + half;
    }
  }
  EXPECT_LE(opt, best + 1e-7 * std::abs(best));
  EXPECT_NEAR(opt, best, 1e-3 * std::abs(best));
}

TEST(Subproblem, LogHandlingAndStructureAgree) {
  const auto d = fixture::desk(4, 5, 0.0);
  const Iterate it = detail::default_start(d.ch, d.s);
  const Subproblem a = build_subproblem(it, d.ch, d.s);
  SubproblemOptions ex;
  ex.structure = conic::ComplexStructure::kExplicit;
  const Subproblem b = build_subproblem(it, d.ch, d.s, ex);
  const auto na = conic::solve(a.program);
  const auto nb = conic::solve(b.program);
  const auto ca = conic::solve_with_cuts(a.program);
  ASSERT_TRUE(na.optimal() && nb.optimal() && ca.optimal());
  EXPECT_NEAR(na.primal_objective, nb.primal_objective, 1e-6 * (1.0 + std::abs(na.primal_objective)));
  EXPECT_NEAR(na.primal_objective, ca.primal_objective, 1e-6 * (1.0 + std::abs(na.primal_objective)));
  EXPECT_EQ(ca.log_handling, "cutting-plane");
}

// ---------------------------------------------------------------------------
// Extraction

TEST(Extraction, RankOneInputReturnsVector) {
  const auto d = fixture::tiny(6, 2, 1, true);
  std::mt19937_64 rng(3);
  std::vector<CMat> big;
  std::vector<CVec> w;
  for (int k = 0; k < 2; ++k) {
    w.push_back(0.05 * fixture::random_cvec(6, rng));
    big.push_back(outer(w.back()));
  }
  ExtractionContext ctx;
  ctx.p = RVec::Constant(1, 0.001);
  const Extraction ex = extract_rank_one(big, d.ch, ctx);
  EXPECT_FALSE(ex.randomized);
  for (int k = 0; k < 2; ++k) {
    EXPECT_LE((outer(ex.w[k]) - big[k]).norm(), 1e-10 * std::max(1.0, big[k].norm()));
    EXPECT_NEAR(std::abs(ex.w[k].dot(w[k])), w[k].squaredNorm(), 1e-10 * w[k].squaredNorm());
  }
}

TEST(Extraction, DominantEigenpair) {
  const auto d = fixture::tiny(2, 1, 1, false);
  ExtractionContext ctx;
  ctx.p = RVec::Constant(1, 0.001);
  ctx.rank_ratio_threshold = 2.0;
  CMat w = CMat::Zero(2, 2);
  w(0, 0) = 4.0;
  w(1, 1) = 1.0;
  const Extraction ex = extract_rank_one({w}, d.ch, ctx);
  EXPECT_FALSE(ex.randomized);
  EXPECT_NEAR(std::abs(ex.w[0](0) - cd(2.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(ex.w[0](1)), 0.0, 1e-12);
}

TEST(Extraction, PhaseConvention) {
  CVec v(3);
  v << 0.0, cd(0.0, -2.0), cd(1.0, 1.0);
  const CVec pc = principal_component(outer(v));
  EXPECT_NEAR(pc(1).imag(), 0.0, 1e-12);
  EXPECT_GT(pc(1).real(), 0.0);
}

TEST(Extraction, RandomizationNoWorseThanEvd) {
  const auto d = fixture::desk(8, 6, 5.0);
  std::mt19937_64 rng(4);
  std::vector<CMat> big{fixture::random_psd(8, 2, 0.01, rng), fixture::random_psd(8, 2, 0.01, rng)};
  ExtractionContext ctx;
  ctx.p = RVec::Constant(2, 0.001);
  ctx.seed = 17;
  const Extraction ex = extract_rank_one(big, d.ch, ctx);
  EXPECT_TRUE(ex.randomized);
  Solution evd;
  for (const auto& w : big) evd.w.push_back(principal_component(w));
  evd.p = ctx.p;
  EXPECT_GE(ex.sum_rate, evaluate(d.ch, evd).sum_rate - 1e-12);
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(ex.w[k].squaredNorm(), big[k].trace().real(), 1e-12);
}

TEST(Extraction, AllCandidatesInfeasibleThrows) {
  const auto d = fixture::desk(8, 6);
  std::mt19937_64 rng(5);
  std::vector<CMat> big{fixture::random_psd(8, 3, 1e-6, rng), fixture::random_psd(8, 3, 1e-6, rng)};
  ExtractionContext ctx;
  ctx.p = RVec::Constant(2, 0.01);
  ctx.gamma_r = 1e6;
  ctx.samples = 10;
  EXPECT_THROW(extract_rank_one(big, d.ch, ctx), RandomizationFailure);
}

// ---------------------------------------------------------------------------
// Outer loop

TEST(ScaSolve, MonotoneFeasibleAndRadarActive) {
  const auto d = fixture::desk(16, 0);
  const RunReport rep = sca_solve(d.ch, d.s);
  ASSERT_GE(rep.iterations.size(), 2u);
  for (std::size_t t = 1; t < rep.iterations.size(); ++t)
    EXPECT_LE(rep.iterations[t].objective, rep.iterations[t - 1].objective + 1e-7);
  EXPECT_TRUE(rep.converged);
  double tr = 0.0;
  for (const auto& w : rep.final_iterate.big_w) tr += w.trace().real();
  EXPECT_LE(tr, d.s.p_bs_max * (1.0 + 1e-8));
  for (int m = 0; m < 2; ++m) {
    EXPECT_GE(rep.solution.p(m), 0.0);
    EXPECT_LE(rep.solution.p(m), d.s.p_d2d_max[m] * (1.0 + 1e-8));
  }
  EXPECT_GE(to_db(rep.metrics.radar_sinr), 15.0 - 0.05);
  EXPECT_LE(to_db(rep.metrics.radar_sinr), 15.0 + 0.5);
  EXPECT_NEAR(std::abs(rep.solution.u.dot(steering_vector(0.0, 16))), 1.0, 1e-10);
  EXPECT_EQ(rep.log_handling, "native");
}

TEST(ScaSolve, ZeroThresholdEqualsCommunicationOnly) {
  const auto d = fixture::desk(8, 2, -300.0);
  ASSERT_EQ(d.s.gamma_r, 0.0);
  ScaSettings comm;
  comm.radar_constraint = false;
  const RunReport a = sca_solve(d.ch, d.s);
  const RunReport b = sca_solve(d.ch, d.s, comm);
  EXPECT_NEAR(a.metrics.sum_rate, b.metrics.sum_rate, 1e-4);
}

TEST(ScaSolve, UnattainableThresholdRaises) {
  const auto d = fixture::desk(8, 0, 40.0);
  EXPECT_THROW(sca_solve(d.ch, d.s), InfeasibleRadarConstraint);
}

TEST(ScaSolve, Deterministic) {
  const auto d = fixture::desk(8, 3, 5.0);
  const RunReport a = sca_solve(d.ch, d.s), b = sca_solve(d.ch, d.s);
  ASSERT_EQ(a.iterations.size(), b.iterations.size());
  for (std::size_t t = 0; t < a.iterations.size(); ++t) EXPECT_EQ(a.iterations[t].objective, b.iterations[t].objective);
  EXPECT_EQ(a.metrics.sum_rate, b.metrics.sum_rate);
}

TEST(ScaSettingsValidate, RejectsBadValues) {
  ScaSettings s;
  s.max_iters = 0;
  EXPECT_THROW(s.validate(), InvalidScenario);
  s = {};
  s.rel_tol = 0.0;
  EXPECT_THROW(s.validate(), InvalidScenario);
}

// ---------------------------------------------------------------------------
// Complexity estimate

TEST(Complexity, ReferenceValue) {
  EXPECT_NEAR(complexity_estimate(2, 32, 2, 1e-6), 2024867694594.5547, 1e-9 * 2024867694594.5547);
}

TEST(Complexity, MonotoneAndLinearInLogEps) {
  const double base = complexity_estimate(2, 16, 2, 1e-3);
  EXPECT_GT(complexity_estimate(3, 16, 2, 1e-3), base);
  EXPECT_GT(complexity_estimate(2, 17, 2, 1e-3), base);
  EXPECT_GT(complexity_estimate(2, 16, 3, 1e-3), base);
  EXPECT_NEAR(complexity_estimate(2, 16, 2, 1e-6), 2.0 * base, 1e-9 * base);
  EXPECT_NEAR(complexity_estimate(2, 16, 2, 1e-3, 5), 5.0 * base, 1e-9 * base);
  EXPECT_THROW(complexity_estimate(2, 16, 2, 1.0), InvalidScenario);
}
