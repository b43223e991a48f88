#pragma once

// Geometry, steering vectors and channel realization for the full-duplex
// ISAC base station with underlaid D2D pairs.
//
// Conventions: the BS sits at the origin and a polar placement (θ, d) maps to
// Cartesian (d·sin θ, d·cos θ). All powers are linear watts; dB/dBm only
// appear at the configuration boundary (see config.hpp).

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "isacd2d/errors.hpp"
#include "isacd2d/linalg.hpp"

namespace isacd2d {

/// Name of the generator behind every seeded draw; written to run metadata.
inline constexpr const char* kRngAlgorithm = "std::mt19937_64";
using Rng = std::mt19937_64;

struct ArrayConfig {
  int n_tx = 16;
  int n_rx = 16;
};

struct PolarPlacement {
  double angle_deg = 0.0;
  double distance_m = 1.0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 to_cartesian(const PolarPlacement& p) {
  const double th = deg_to_rad(p.angle_deg);
  return {p.distance_m * std::sin(th), p.distance_m * std::cos(th)};
}

inline PolarPlacement to_polar(const Point2& c) {
  return {std::atan2(c.x, c.y) * 180.0 / kPi, std::hypot(c.x, c.y)};
}

inline double distance(const PolarPlacement& a, const PolarPlacement& b) {
  const Point2 pa = to_cartesian(a);
  const Point2 pb = to_cartesian(b);
  return std::hypot(pa.x - pb.x, pa.y - pb.y);
}

struct Scenario {
  ArrayConfig array;
  std::vector<PolarPlacement> cus;
  std::vector<PolarPlacement> d2d_tx;
  std::vector<PolarPlacement> d2d_rx;
  double target_angle_deg = 0.0;
  std::vector<double> clutter_angles_deg;
  double target_power_gain = 1e-11;           // |α0|²
  std::vector<double> clutter_power_gains;    // |α_i|²
  double si_power_gain = 1e-13;               // β, per SI matrix entry
  double pathloss_ref = 1e-3;                 // ε0 at 1 m
  double pathloss_exp = 3.0;                  // ν
  double noise_cu = 1e-12;
  double noise_d2d = 1e-12;
  double noise_radar = 1e-12;
  double p_bs_max = 0.03;
  std::vector<double> p_d2d_max;
  double gamma_r = 31.6227766016838;          // linear

  int num_cus() const { return static_cast<int>(cus.size()); }
  int num_pairs() const { return static_cast<int>(d2d_rx.size()); }
  int num_clutters() const { return static_cast<int>(clutter_angles_deg.size()); }

  void validate() const {
    auto fail = [](const std::string& msg) { throw InvalidScenario(msg); };
    if (array.n_tx < 1 || array.n_rx < 1) fail("array sizes must be >= 1");
    if (cus.empty()) fail("at least one CU is required");
    if (d2d_tx.size() != d2d_rx.size()) fail("d2d_tx and d2d_rx lengths differ");
    if (p_d2d_max.size() != d2d_rx.size()) fail("p_d2d_max length must equal the number of D2D pairs");
    if (clutter_angles_deg.size() != clutter_power_gains.size())
      fail("clutter angle and gain lengths differ");
    auto check_place = [&](const PolarPlacement& p, const char* what) {
      if (!(p.distance_m > 0.0)) fail(std::string(what) + ": distance must be > 0");
      if (!(p.angle_deg > -90.0 && p.angle_deg < 90.0))
        fail(std::string(what) + ": angle must lie in (-90, 90) degrees");
    };
    for (const auto& p : cus) check_place(p, "cu");
    for (const auto& p : d2d_tx) check_place(p, "d2d_tx");
    for (const auto& p : d2d_rx) check_place(p, "d2d_rx");
    auto positive = [&](double v, const char* what) {
      if (!(v > 0.0)) fail(std::string(what) + " must be > 0");
    };
    positive(target_power_gain, "target_power_gain");
    for (double g : clutter_power_gains) positive(g, "clutter_power_gain");
    positive(si_power_gain, "si_power_gain");
    positive(pathloss_ref, "pathloss_ref");
    positive(pathloss_exp, "pathloss_exp");
    positive(noise_cu, "noise_cu");
    positive(noise_d2d, "noise_d2d");
    positive(noise_radar, "noise_radar");
    positive(p_bs_max, "p_bs_max");
    for (double p : p_d2d_max) positive(p, "p_d2d_max");
    if (!(gamma_r >= 0.0)) fail("gamma_r must be >= 0");
  }
};

struct NoiseLevels {
  double cu = 1e-12;
  double d2d = 1e-12;
  double radar = 1e-12;
};

/// Every realized coefficient needed to evaluate SINRs, plus the angles and
/// noise floors those evaluations depend on.
struct ChannelSet {
  int n_tx = 0;
  int n_rx = 0;
  std::vector<CVec> h_bs_cu;     // K × N_t, BS → CU k
  std::vector<CVec> h_bs_d2drx;  // M × N_t, BS → D2D-RX m
  std::vector<CVec> h_d2dtx_bs;  // M × N_r, D2D-TX m → BS receive array
  CMat h_d2dtx_d2drx;            // (m', m): D2D-TX m' → D2D-RX m
  CMat h_d2dtx_cu;               // (m, k): D2D-TX m → CU k
  CMat h_si;                     // N_r × N_t residual self-interference
  cd target_amp{0.0, 0.0};
  std::vector<cd> clutter_amps;
  double target_angle_deg = 0.0;
  std::vector<double> clutter_angles_deg;
  NoiseLevels noise;

  int num_cus() const { return static_cast<int>(h_bs_cu.size()); }
  int num_pairs() const { return static_cast<int>(h_bs_d2drx.size()); }
};

/// a(θ) = n^{-1/2} [1, e^{jπ sin θ}, …, e^{jπ(n−1) sin θ}]^T for a half-wavelength ULA.
inline CVec steering_vector(double angle_deg, int n) {
  CVec a(n);
  const double phase = kPi * std::sin(deg_to_rad(angle_deg));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) a(i) = scale * std::polar(1.0, phase * i);
  return a;
}

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline cd random_phase(Rng& rng) { return std::polar(1.0, 2.0 * kPi * uniform01(rng)); }

}  // namespace detail

inline double pathloss_amplitude(const Scenario& s, double d) {
  if (!(d > 0.0)) throw InvalidScenario("coincident nodes (zero distance)");
  return std::sqrt(s.pathloss_ref * std::pow(d, -s.pathloss_exp));
}

/// Draws H_SI phases (row-major), then the target phase, then clutter phases.
inline ChannelSet realize_channels(const Scenario& s, std::uint64_t seed) {
  s.validate();
  const int nt = s.array.n_tx;
  const int nr = s.array.n_rx;
  const int k_cu = s.num_cus();
  const int m_d2d = s.num_pairs();

  ChannelSet ch;
  ch.n_tx = nt;
  ch.n_rx = nr;
  ch.target_angle_deg = s.target_angle_deg;
  ch.clutter_angles_deg = s.clutter_angles_deg;
  ch.noise = {s.noise_cu, s.noise_d2d, s.noise_radar};

  const double sqrt_nt = std::sqrt(static_cast<double>(nt));
  const double sqrt_nr = std::sqrt(static_cast<double>(nr));

  for (const auto& cu : s.cus)
    ch.h_bs_cu.push_back(pathloss_amplitude(s, cu.distance_m) * sqrt_nt *
                         steering_vector(cu.angle_deg, nt));
  for (const auto& rx : s.d2d_rx)
    ch.h_bs_d2drx.push_back(pathloss_amplitude(s, rx.distance_m) * sqrt_nt *
                            steering_vector(rx.angle_deg, nt));
  for (const auto& tx : s.d2d_tx)
    ch.h_d2dtx_bs.push_back(pathloss_amplitude(s, tx.distance_m) * sqrt_nr *
                            steering_vector(tx.angle_deg, nr));

  ch.h_d2dtx_d2drx = CMat::Zero(m_d2d, m_d2d);
  for (int mp = 0; mp < m_d2d; ++mp)
    for (int m = 0; m < m_d2d; ++m)
      ch.h_d2dtx_d2drx(mp, m) = pathloss_amplitude(s, distance(s.d2d_tx[mp], s.d2d_rx[m]));

  ch.h_d2dtx_cu = CMat::Zero(m_d2d, k_cu);
  for (int m = 0; m < m_d2d; ++m)
    for (int k = 0; k < k_cu; ++k)
      ch.h_d2dtx_cu(m, k) = pathloss_amplitude(s, distance(s.d2d_tx[m], s.cus[k]));

  Rng rng(seed);
  const double si_amp = std::sqrt(s.si_power_gain);
  ch.h_si.resize(nr, nt);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nt; ++j) ch.h_si(i, j) = si_amp * detail::random_phase(rng);

  ch.target_amp = std::sqrt(s.target_power_gain) * detail::random_phase(rng);
  for (double g : s.clutter_power_gains)
    ch.clutter_amps.push_back(std::sqrt(g) * detail::random_phase(rng));
  return ch;
}

/// Uniform box for a D2D receiver placement.
struct PlacementRange {
  double angle_lo_deg = 0.0;
  double angle_hi_deg = 0.0;
  double distance_lo_m = 1.0;
  double distance_hi_m = 1.0;
};

/// Draws each D2D-RX uniformly in its (θ, d) box and places its TX at a fixed
/// separation in a uniformly drawn bearing. Bearings that would put the TX
/// behind the array (y ≤ 0, outside (−90°, 90°)) are redrawn.
inline Scenario random_d2d_placement(Scenario s, const std::vector<PlacementRange>& ranges,
                                     std::uint64_t seed, double separation_m = 20.0) {
  if (ranges.empty()) throw InvalidScenario("no D2D placement ranges given");
  Rng rng(seed);
  s.d2d_rx.clear();
  s.d2d_tx.clear();
  for (const auto& r : ranges) {
    if (r.angle_hi_deg < r.angle_lo_deg || r.distance_hi_m < r.distance_lo_m)
      throw InvalidScenario("empty placement interval");
    PolarPlacement rx{detail::uniform(rng, r.angle_lo_deg, r.angle_hi_deg),
                      detail::uniform(rng, r.distance_lo_m, r.distance_hi_m)};
    const Point2 c = to_cartesian(rx);
    Point2 t{};
    for (int attempt = 0;; ++attempt) {
      const double bearing = 2.0 * kPi * detail::uniform01(rng);
      t = {c.x + separation_m * std::sin(bearing), c.y + separation_m * std::cos(bearing)};
      if (t.y > 1e-6 || attempt > 10000) break;
    }
    if (!(t.y > 1e-6)) throw InvalidScenario("no valid D2D-TX bearing for this RX placement");
    s.d2d_rx.push_back(rx);
    s.d2d_tx.push_back(to_polar(t));
  }
  return s;
}

/// B = Σ_i α_i a_r(θ_i) a_t^H(θ_i) + H_SI.
inline CMat clutter_si_matrix(const ChannelSet& ch) {
  CMat b = ch.h_si;
  for (std::size_t i = 0; i < ch.clutter_amps.size(); ++i)
    b += ch.clutter_amps[i] * steering_vector(ch.clutter_angles_deg[i], ch.n_rx) *
         steering_vector(ch.clutter_angles_deg[i], ch.n_tx).adjoint();
  return b;
}

/// A0 = α0 a_r(θ0) a_t^H(θ0).
inline CMat target_response(const ChannelSet& ch) {
  return ch.target_amp * steering_vector(ch.target_angle_deg, ch.n_rx) *
         steering_vector(ch.target_angle_deg, ch.n_tx).adjoint();
}

}  // namespace isacd2d
