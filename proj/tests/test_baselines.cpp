#include <gtest/gtest.h>

#include <random>

#include "isacd2d/baselines.hpp"
#include "test_util.hpp"

using namespace isacd2d;

namespace {

fixture::Desk strong_si(int n, std::uint64_t seed, double si_db) {
  ExperimentConfig c = reference_config(n);
  c.si_power_gain_db = si_db;
  fixture::Desk d;
  d.s = c.scenario(seed);
  d.ch = realize_channels(d.s, seed);
  return d;
}

}  // namespace

TEST(Mrt, PowerSplitAndDirection) {
  const auto d = fixture::desk(16, 1);
  const Solution s = mrt(d.ch, d.s);
  ASSERT_EQ(s.w.size(), 2u);
  for (int k = 0; k < 2; ++k) {
    EXPECT_NEAR(s.w[k].squaredNorm(), d.s.p_bs_max / 2, 1e-15 * d.s.p_bs_max);
    const CVec& h = d.ch.h_bs_cu[k];
    EXPECT_NEAR(std::abs(h.dot(s.w[k])), h.norm() * s.w[k].norm(), 1e-12 * h.norm() * s.w[k].norm());
  }
  for (int m = 0; m < 2; ++m) EXPECT_EQ(s.p(m), d.s.p_d2d_max[m]);
  EXPECT_NEAR(std::abs(s.u.dot(steering_vector(0.0, 16))), 1.0, 1e-10);
}

TEST(Zf, NullsInterferenceChannels) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = fixture::desk(16, seed);
    std::vector<std::string> warn;
    const Solution s = zf(d.ch, d.s, &warn);
    EXPECT_TRUE(warn.empty());
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(s.w[k].squaredNorm(), d.s.p_bs_max / 2, 1e-14 * d.s.p_bs_max);
      const double scale = s.w[k].norm();
      EXPECT_LE(std::abs(d.ch.h_bs_cu[1 - k].dot(s.w[k])), 1e-10 * scale * d.ch.h_bs_cu[1 - k].norm());
      for (int m = 0; m < 2; ++m)
        EXPECT_LE(std::abs(d.ch.h_bs_d2drx[m].dot(s.w[k])), 1e-10 * scale * d.ch.h_bs_d2drx[m].norm());
      EXPECT_GT(std::abs(d.ch.h_bs_cu[k].dot(s.w[k])), 0.0);
    }
  }
}

TEST(Zf, ProjectorIsOrthogonal) {
  std::mt19937_64 rng(2);
  const CMat h = fixture::random_cmat(6, 3, rng);
  const CMat p = null_projector(h);
  EXPECT_LE((p * p - p).norm(), 1e-12);
  EXPECT_LE((p - p.adjoint()).norm(), 1e-14);
  EXPECT_LE((p * h).norm(), 1e-12 * h.norm());
  EXPECT_NEAR(p.trace().real(), 3.0, 1e-12);
  EXPECT_LE((null_projector(CMat(6, 0)) - CMat::Identity(6, 6)).norm(), 0.0);
}

TEST(Zf, OrthogonalChannelsReduceToMrt) {
  auto d = fixture::tiny(4, 2, 1, false);
  for (auto* v : {&d.ch.h_bs_cu[0], &d.ch.h_bs_cu[1], &d.ch.h_bs_d2drx[0]}) v->setZero();
  d.ch.h_bs_cu[0](0) = cd(0.0, 3e-4);
  d.ch.h_bs_cu[1](1) = 2e-4;
  d.ch.h_bs_d2drx[0](2) = 1e-4;
  const Solution a = zf(d.ch, d.s), b = mrt(d.ch, d.s);
  for (int k = 0; k < 2; ++k) EXPECT_LE((a.w[k] - b.w[k]).norm(), 1e-12 * b.w[k].norm());
}

TEST(Zf, RankDeficientChannelsWarn) {
  auto d = fixture::tiny(4, 2, 2, false);
  d.ch.h_bs_d2drx[1] = 2.0 * d.ch.h_bs_d2drx[0];
  std::vector<std::string> warn;
  const Solution s = zf(d.ch, d.s, &warn);
  EXPECT_EQ(warn.size(), 2u);
  for (int k = 0; k < 2; ++k) EXPECT_LE(std::abs(d.ch.h_bs_d2drx[0].dot(s.w[k])), 1e-10 * s.w[k].norm() * d.ch.h_bs_d2drx[0].norm());
}

TEST(Zf, CuInNulledSpanThrows) {
  auto d = fixture::tiny(2, 2, 1, false);
  EXPECT_THROW(zf(d.ch, d.s), NumericalFailure);
}

TEST(SensingOnly, CleanCaseReachesBound) {
  auto d = fixture::desk(8, 0);
  d.ch.h_si.setZero();
  d.ch.clutter_amps.clear();
  d.ch.clutter_angles_deg.clear();
  const SensingResult r = sensing_only(d.ch, d.s);
  const double bound = std::norm(d.ch.target_amp) * d.s.p_bs_max / d.ch.noise.radar;
  EXPECT_NEAR(to_db(r.model_sinr), to_db(bound), 0.05);
  EXPECT_NEAR(r.f.trace().real(), d.s.p_bs_max, 1e-12 * d.s.p_bs_max);
}

TEST(SensingOnly, BisectionBracketAndPeak) {
  const auto d = strong_si(8, 0, -80.0);
  const SensingResult r = sensing_only(d.ch, d.s);
  EXPECT_GE(r.bisections, 1);
  EXPECT_LT(r.upper_db - r.lower_db, 0.05);
  EXPECT_NEAR(to_db(r.model_sinr), r.lower_db, 1e-9);
  EXPECT_LE(r.f.trace().real(), d.s.p_bs_max * (1.0 + 1e-8));
  Eigen::SelfAdjointEigenSolver<CMat> es(r.f);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * d.s.p_bs_max);
  ASSERT_EQ(r.solution.big_w->size(), 2u);
  EXPECT_LE(((*r.solution.big_w)[0] + (*r.solution.big_w)[1] - r.f).norm(), 1e-15);
  EXPECT_FALSE(r.notes.empty());
}

TEST(SensingOnly, AtLeastProposedRadarSinr) {
  const auto d = fixture::desk(8, 2, 5.0);
  const RunReport prop = sca_solve(d.ch, d.s);
  const SensingResult r = sensing_only(d.ch, d.s);
  const RVec p0 = RVec::Zero(2);
  const CMat f = covariance(prop.solution);
  EXPECT_GE(r.model_sinr, optimal_radar_sinr(d.ch, f, p0, false) * (1.0 - 1e-6));
}

TEST(CommOnly, SingleUserClosedForm) {
  const auto d = fixture::tiny(6, 1, 0, true);
  const RunReport r = comm_only(d.ch, d.s);
  const double want = std::log2(1.0 + d.s.p_bs_max * d.ch.h_bs_cu[0].squaredNorm() / d.ch.noise.cu);
  EXPECT_NEAR(r.metrics.sum_rate, want, 1e-4);
  EXPECT_EQ(r.scheme, "comm-only");
}

TEST(CommOnly, AtLeastProposed) {
  const auto d = fixture::desk(8, 1, 5.0);
  const RunReport prop = sca_solve(d.ch, d.s);
  const RunReport comm = comm_only(d.ch, d.s, {}, prop.final_iterate);
  EXPECT_GE(comm.metrics.sum_rate, prop.metrics.sum_rate - 1e-6);
}

TEST(BaselineKind, Names) {
  EXPECT_STREQ(to_string(BaselineKind::kMrt), "mrt");
  EXPECT_STREQ(to_string(BaselineKind::kZf), "zf");
  EXPECT_STREQ(to_string(BaselineKind::kSensingOnly), "sensing-only");
  EXPECT_STREQ(to_string(BaselineKind::kCommOnly), "comm-only");
}
