#include <gtest/gtest.h>

#include <random>

#include "isacd2d/metrics.hpp"
#include "isacd2d/rxbeam.hpp"
#include "test_util.hpp"

using namespace isacd2d;

namespace {

/// K CUs, M pairs, no clutter, zero SI, unit noise; channels filled by the caller.
ChannelSet bare(int n, int k, int m) {
  ChannelSet ch;
  ch.n_tx = ch.n_rx = n;
  ch.h_bs_cu.assign(k, CVec::Zero(n));
  ch.h_bs_d2drx.assign(m, CVec::Zero(n));
  ch.h_d2dtx_bs.assign(m, CVec::Zero(n));
  ch.h_d2dtx_d2drx = CMat::Zero(m, m);
  ch.h_d2dtx_cu = CMat::Zero(m, k);
  ch.h_si = CMat::Zero(n, n);
  ch.target_amp = 1.0;
  ch.noise = {1.0, 1.0, 1.0};
  return ch;
}

Solution random_solution(const ChannelSet& ch, std::mt19937_64& rng) {
  Solution s;
  for (int k = 0; k < ch.num_cus(); ++k) s.w.push_back(0.01 * fixture::random_cvec(ch.n_tx, rng));
  s.p = RVec::Constant(ch.num_pairs(), 0.004);
  s.u = fixture::random_cvec(ch.n_rx, rng);
  return s;
}

}  // namespace

TEST(Covariance, SingleBeam) {
  Solution s;
  s.w.push_back((CVec(2) << 1.0, 0.0).finished());
  const CMat f = covariance(s);
  EXPECT_EQ(f(0, 0), cd(1.0));
  EXPECT_EQ(f(1, 1), cd(0.0));
  EXPECT_EQ(f(0, 1), cd(0.0));
}

TEST(Covariance, OrthonormalPair) {
  Solution s;
  s.w.push_back((CVec(3) << 1.0, 0.0, 0.0).finished());
  s.w.push_back((CVec(3) << 0.0, cd(0.0, 1.0), 0.0).finished());
  const CMat f = covariance(s);
  EXPECT_NEAR(f.trace().real(), 2.0, 1e-15);
  EXPECT_NEAR((f * f - f).norm(), 0.0, 1e-15);
}

TEST(Covariance, MatchesOuterProductSum) {
  std::mt19937_64 rng(1);
  Solution s;
  CMat brute = CMat::Zero(5, 5);
  for (int k = 0; k < 3; ++k) {
    s.w.push_back(fixture::random_cvec(5, rng));
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) brute(i, j) += s.w[k](i) * std::conj(s.w[k](j));
  }
  EXPECT_LE((covariance(s) - brute).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CuSinr, HandExample) {
  ChannelSet ch = bare(2, 1, 0);
  ch.h_bs_cu[0] << 1.0, 0.0;
  Solution s;
  s.w.push_back((CVec(2) << 2.0, 0.0).finished());
  s.p = RVec();
  EXPECT_DOUBLE_EQ(cu_sinr(ch, s, 0), 4.0);
  s.w[0] << 0.0, 3.0;
  EXPECT_DOUBLE_EQ(cu_sinr(ch, s, 0), 0.0);
}

TEST(D2dSinr, HandExample) {
  ChannelSet ch = bare(2, 1, 1);
  ch.h_d2dtx_d2drx(0, 0) = 2.0;
  ch.h_bs_d2drx[0] << 1.0, 0.0;
  Solution s;
  s.w.push_back((CVec(2) << 1.0, 0.0).finished());
  s.p = RVec::Constant(1, 1.0);
  EXPECT_DOUBLE_EQ(d2d_sinr(ch, s, 0), 2.0);
  s.p(0) = 0.0;
  EXPECT_DOUBLE_EQ(d2d_sinr(ch, s, 0), 0.0);
}

TEST(Sinr, RandomMatchesScalarLoops) {
  const auto d = fixture::desk(8, 5);
  std::mt19937_64 rng(2);
  const Solution s = random_solution(d.ch, rng);
  const Metrics m = evaluate(d.ch, s);
  for (int k = 0; k < 2; ++k) {
    double sig = 0.0, intf = d.ch.noise.cu;
    for (int kp = 0; kp < 2; ++kp) {
      cd ip = 0.0;
      for (int i = 0; i < 8; ++i) ip += std::conj(d.ch.h_bs_cu[k](i)) * s.w[kp](i);
      (kp == k ? sig : intf) += std::norm(ip);
    }
    for (int mm = 0; mm < 2; ++mm) intf += s.p(mm) * std::norm(d.ch.h_d2dtx_cu(mm, k));
    EXPECT_NEAR(m.sinr_cu[k], sig / intf, 1e-10 * sig / intf);
  }
  for (int mm = 0; mm < 2; ++mm) {
    double intf = d.ch.noise.d2d;
    for (int k = 0; k < 2; ++k) {
      cd ip = 0.0;
      for (int i = 0; i < 8; ++i) ip += std::conj(d.ch.h_bs_d2drx[mm](i)) * s.w[k](i);
      intf += std::norm(ip);
    }
    intf += s.p(1 - mm) * std::norm(d.ch.h_d2dtx_d2drx(1 - mm, mm));
    const double want = s.p(mm) * std::norm(d.ch.h_d2dtx_d2drx(mm, mm)) / intf;
    EXPECT_NEAR(m.sinr_d2d[mm], want, 1e-10 * want);
  }
  double sr = 0.0;
  for (double x : m.sinr_cu) sr += std::log2(1.0 + x);
  for (double x : m.sinr_d2d) sr += std::log2(1.0 + x);
  EXPECT_NEAR(m.sum_rate, sr, 1e-10);
}

TEST(Sinr, MatrixAndVectorFormsAgree) {
  const auto d = fixture::desk(8, 6);
  std::mt19937_64 rng(3);
  Solution s = random_solution(d.ch, rng);
  Solution t = s;
  t.big_w = std::vector<CMat>{outer(s.w[0]), outer(s.w[1])};
  t.w.clear();
  const Metrics a = evaluate(d.ch, s), b = evaluate(d.ch, t);
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(a.sinr_cu[k], b.sinr_cu[k], 1e-10 * a.sinr_cu[k]);
  for (int m = 0; m < 2; ++m) EXPECT_NEAR(a.sinr_d2d[m], b.sinr_d2d[m], 1e-10 * a.sinr_d2d[m]);
  EXPECT_NEAR(a.radar_sinr, b.radar_sinr, 1e-10 * a.radar_sinr);
  EXPECT_NEAR(sum_rate(d.ch, *t.big_w, t.p), a.sum_rate, 1e-10);
}

TEST(RadarSinr, CleanCase) {
  ChannelSet ch = bare(4, 1, 0);
  ch.target_amp = std::sqrt(1e-11);
  ch.noise.radar = 1e-12;
  Solution s;
  s.w.push_back(steering_vector(0.0, 4));
  s.p = RVec();
  s.u = steering_vector(0.0, 4);
  EXPECT_NEAR(radar_sinr(ch, s), 10.0, 1e-12);
}

TEST(RadarSinr, InvariantToFilterScaling) {
  const auto d = fixture::desk(8, 7);
  std::mt19937_64 rng(4);
  Solution s = random_solution(d.ch, rng);
  const double base = radar_sinr(d.ch, s);
  const CVec u = s.u;
  for (int i = 0; i < 10; ++i) {
    s.u = u * cd(std::exp(0.7 * i - 3.0), 0.3 * i);
    EXPECT_NEAR(radar_sinr(d.ch, s), base, 1e-10 * base);
  }
}

TEST(RadarSinr, SymbolMonteCarlo) {
  // E|u^H A0 x|² / E|u^H (B x + Σ sqrt(p) h d + n)|² with unit-power symbols.
  const auto d = fixture::desk(4, 8);
  std::mt19937_64 rng(5);
  Solution s = random_solution(d.ch, rng);
  const CMat a0 = target_response(d.ch);
  const CMat b = clutter_si_matrix(d.ch);
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  auto cn = [&] { return cd(nd(rng), nd(rng)); };
  double num = 0.0, den = 0.0;
  const int draws = 1000000;
  const CVec a0u = a0.adjoint() * s.u, bu = b.adjoint() * s.u;
  for (int t = 0; t < draws; ++t) {
    CVec x = CVec::Zero(4);
    for (const auto& w : s.w) x += w * cn();
    num += std::norm(a0u.dot(x));
    cd v = bu.dot(x);
    for (int m = 0; m < 2; ++m) v += std::sqrt(s.p(m)) * s.u.dot(d.ch.h_d2dtx_bs[m]) * cn();
    for (int i = 0; i < 4; ++i) v += std::conj(s.u(i)) * std::sqrt(d.ch.noise.radar) * cn();
    den += std::norm(v);
  }
  const double mc = num / den;
  EXPECT_NEAR(mc, radar_sinr(d.ch, s), 0.01 * radar_sinr(d.ch, s));
}

TEST(Beampatterns, IdentityCovarianceIsFlat) {
  ChannelSet ch = bare(6, 1, 0);
  Solution s;
  s.big_w = std::vector<CMat>{CMat::Identity(6, 6)};
  s.u = steering_vector(0.0, 6);
  const auto bp = beampatterns(ch, s, {-60.0, -10.0, 0.0, 33.0, 80.0});
  for (double v : bp.p1) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_NEAR(bp.p2[2], 1.0, 1e-12);
  for (double v : bp.p2) EXPECT_LE(v, 1.0 + 1e-12);
}

TEST(Beampatterns, CascadeIsProduct) {
  const auto d = fixture::desk(8, 9);
  std::mt19937_64 rng(6);
  const Solution s = random_solution(d.ch, rng);
  std::vector<double> grid;
  for (double th = -90.0; th <= 90.0; th += 3.0) grid.push_back(th);
  const auto bp = beampatterns(d.ch, s, grid);
  const CMat f = covariance(s);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_GE(bp.p1[i], 0.0);
    EXPECT_GE(bp.p2[i], 0.0);
    EXPECT_NEAR(bp.p3[i], bp.p1[i] * bp.p2[i], 1e-12 * std::max(1.0, bp.p3[i]));
    EXPECT_NEAR(bp.p1[i], quad_form(f, steering_vector(grid[i], 8)), 1e-15);
  }
}
