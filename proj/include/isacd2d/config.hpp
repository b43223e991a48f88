#pragma once

// Experiment configuration: a Scenario template in engineering units (dB, dBm,
// degrees, meters) plus the D2D placement boxes, read from JSON.
//
// Schema (all keys optional; defaults are the desk-scale reference geometry):
//   array                      {"n_tx": 16, "n_rx": 16}
//   cus                        [{"angle_deg": -75, "distance_m": 50}, ...]
//   d2d_pairs                  [{"rx": {angle_deg, distance_m}, "tx": {...}}, ...]   fixed placement
//   d2d_rx_ranges              [{"angle_deg": [lo, hi], "distance_m": [lo, hi]}, ...] random placement
//   d2d_separation_m           20
//   target_angle_deg           0
//   clutter_angles_deg         [-50, 40]
//   target_gain_db_rel_noise   10      |α0|² / σ_r² in dB
//   clutter_gains_db_rel_noise [30, 30]
//   radar_array_gain           true    multiply both gains by N_t·N_r
//   si_power_gain_db           -130
//   pathloss_ref_db            -30
//   pathloss_exp               3
//   noise_cu_dbm, noise_d2d_dbm, noise_radar_dbm   -90
//   p_bs_dbm                   14.771212547  (30 mW)
//   p_d2d_dbm                  [10, 10]      (10 mW each)
//   gamma_r_db                 15
// When d2d_pairs is present it wins over d2d_rx_ranges.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isacd2d/errors.hpp"
#include "isacd2d/scenario.hpp"

namespace isacd2d {

struct D2dPair {
  PolarPlacement rx;
  PolarPlacement tx;
};

struct ExperimentConfig {
  int n_tx = 16;
  int n_rx = 16;
  std::vector<PolarPlacement> cus{{-75.0, 50.0}, {20.0, 60.0}};
  std::vector<D2dPair> d2d_pairs;  // fixed placement; empty → draw from the ranges
  std::vector<PlacementRange> d2d_rx_ranges{{-40.0, -30.0, 70.0, 80.0}, {65.0, 75.0, 70.0, 80.0}};
  double d2d_separation_m = 20.0;
  double target_angle_deg = 0.0;
  std::vector<double> clutter_angles_deg{-50.0, 40.0};
  double target_gain_db_rel_noise = 10.0;
  std::vector<double> clutter_gains_db_rel_noise{30.0, 30.0};
  bool radar_array_gain = true;
  double si_power_gain_db = -130.0;
  double pathloss_ref_db = -30.0;
  double pathloss_exp = 3.0;
  double noise_cu_dbm = -90.0;
  double noise_d2d_dbm = -90.0;
  double noise_radar_dbm = -90.0;
  double p_bs_dbm = 10.0 * std::log10(30.0);
  std::vector<double> p_d2d_dbm{10.0, 10.0};
  double gamma_r_db = 15.0;

  int num_pairs() const {
    return static_cast<int>(d2d_pairs.empty() ? d2d_rx_ranges.size() : d2d_pairs.size());
  }

  /// Scenario with everything but the D2D placement filled in (watts, linear gains).
  Scenario scenario_template() const {
    Scenario s;
    s.array = {n_tx, n_rx};
    s.cus = cus;
    s.target_angle_deg = target_angle_deg;
    s.clutter_angles_deg = clutter_angles_deg;
    const double nr = dbm_to_watts(noise_radar_dbm);
    const double gain = radar_array_gain ? static_cast<double>(n_tx) * n_rx : 1.0;
    s.target_power_gain = gain * nr * db_to_linear(target_gain_db_rel_noise);
    s.clutter_power_gains.clear();
    for (double g : clutter_gains_db_rel_noise) s.clutter_power_gains.push_back(gain * nr * db_to_linear(g));
    s.si_power_gain = db_to_linear(si_power_gain_db);
    s.pathloss_ref = db_to_linear(pathloss_ref_db);
    s.pathloss_exp = pathloss_exp;
    s.noise_cu = dbm_to_watts(noise_cu_dbm);
    s.noise_d2d = dbm_to_watts(noise_d2d_dbm);
    s.noise_radar = nr;
    s.p_bs_max = dbm_to_watts(p_bs_dbm);
    s.p_d2d_max.clear();
    for (double p : p_d2d_dbm) s.p_d2d_max.push_back(dbm_to_watts(p));
    s.gamma_r = gamma_r_db <= -300.0 ? 0.0 : db_to_linear(gamma_r_db);
    for (const auto& pr : d2d_pairs) {
      s.d2d_rx.push_back(pr.rx);
      s.d2d_tx.push_back(pr.tx);
    }
    return s;
  }

  /// Full scenario; random D2D placement uses `placement_seed`.
  Scenario scenario(std::uint64_t placement_seed) const {
    Scenario s = scenario_template();
    if (d2d_pairs.empty() && !d2d_rx_ranges.empty())
      s = random_d2d_placement(std::move(s), d2d_rx_ranges, placement_seed, d2d_separation_m);
    s.validate();
    return s;
  }

  void validate() const {
    if (n_tx < 1 || n_rx < 1) throw InvalidScenario("array sizes must be >= 1");
    if (static_cast<int>(p_d2d_dbm.size()) != num_pairs())
      throw InvalidScenario("p_d2d_dbm needs one entry per D2D pair");
    if (clutter_angles_deg.size() != clutter_gains_db_rel_noise.size())
      throw InvalidScenario("clutter angle and gain lists differ in length");
    scenario(0);
  }
};

/// Desk-scale reference geometry with N_t = N_r = n.
inline ExperimentConfig reference_config(int n = 16) {
  ExperimentConfig c;
  c.n_tx = c.n_rx = n;
  return c;
}

namespace detail {

inline PolarPlacement placement_from_json(const nlohmann::json& j) {
  return {j.at("angle_deg").get<double>(), j.at("distance_m").get<double>()};
}

inline nlohmann::json placement_to_json(const PolarPlacement& p) {
  return {{"angle_deg", p.angle_deg}, {"distance_m", p.distance_m}};
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("array")) {
      detail::read_opt(j.at("array"), "n_tx", c.n_tx);
      detail::read_opt(j.at("array"), "n_rx", c.n_rx);
    }
    if (j.contains("cus")) {
      c.cus.clear();
      for (const auto& e : j.at("cus")) c.cus.push_back(detail::placement_from_json(e));
    }
    if (j.contains("d2d_pairs")) {
      c.d2d_pairs.clear();
      for (const auto& e : j.at("d2d_pairs"))
        c.d2d_pairs.push_back({detail::placement_from_json(e.at("rx")), detail::placement_from_json(e.at("tx"))});
    }
    if (j.contains("d2d_rx_ranges")) {
      c.d2d_rx_ranges.clear();
      for (const auto& e : j.at("d2d_rx_ranges")) {
        const auto a = e.at("angle_deg").get<std::vector<double>>();
        const auto d = e.at("distance_m").get<std::vector<double>>();
        if (a.size() != 2 || d.size() != 2) throw InvalidScenario("ranges must be [lo, hi] pairs");
        c.d2d_rx_ranges.push_back({a[0], a[1], d[0], d[1]});
      }
    }
    detail::read_opt(j, "d2d_separation_m", c.d2d_separation_m);
    detail::read_opt(j, "target_angle_deg", c.target_angle_deg);
    detail::read_opt(j, "clutter_angles_deg", c.clutter_angles_deg);
    detail::read_opt(j, "target_gain_db_rel_noise", c.target_gain_db_rel_noise);
    detail::read_opt(j, "clutter_gains_db_rel_noise", c.clutter_gains_db_rel_noise);
    detail::read_opt(j, "radar_array_gain", c.radar_array_gain);
    detail::read_opt(j, "si_power_gain_db", c.si_power_gain_db);
    detail::read_opt(j, "pathloss_ref_db", c.pathloss_ref_db);
    detail::read_opt(j, "pathloss_exp", c.pathloss_exp);
    detail::read_opt(j, "noise_cu_dbm", c.noise_cu_dbm);
    detail::read_opt(j, "noise_d2d_dbm", c.noise_d2d_dbm);
    detail::read_opt(j, "noise_radar_dbm", c.noise_radar_dbm);
    detail::read_opt(j, "p_bs_dbm", c.p_bs_dbm);
    detail::read_opt(j, "p_d2d_dbm", c.p_d2d_dbm);
    detail::read_opt(j, "gamma_r_db", c.gamma_r_db);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidScenario(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["array"] = {{"n_tx", c.n_tx}, {"n_rx", c.n_rx}};
  j["cus"] = nlohmann::json::array();
  for (const auto& p : c.cus) j["cus"].push_back(detail::placement_to_json(p));
  if (!c.d2d_pairs.empty()) {
    j["d2d_pairs"] = nlohmann::json::array();
    for (const auto& p : c.d2d_pairs)
      j["d2d_pairs"].push_back({{"rx", detail::placement_to_json(p.rx)}, {"tx", detail::placement_to_json(p.tx)}});
  }
  j["d2d_rx_ranges"] = nlohmann::json::array();
  for (const auto& r : c.d2d_rx_ranges)
    j["d2d_rx_ranges"].push_back({{"angle_deg", {r.angle_lo_deg, r.angle_hi_deg}},
                                  {"distance_m", {r.distance_lo_m, r.distance_hi_m}}});
  j["d2d_separation_m"] = c.d2d_separation_m;
  j["target_angle_deg"] = c.target_angle_deg;
  j["clutter_angles_deg"] = c.clutter_angles_deg;
  j["target_gain_db_rel_noise"] = c.target_gain_db_rel_noise;
  j["clutter_gains_db_rel_noise"] = c.clutter_gains_db_rel_noise;
  j["radar_array_gain"] = c.radar_array_gain;
  j["si_power_gain_db"] = c.si_power_gain_db;
  j["pathloss_ref_db"] = c.pathloss_ref_db;
  j["pathloss_exp"] = c.pathloss_exp;
  j["noise_cu_dbm"] = c.noise_cu_dbm;
  j["noise_d2d_dbm"] = c.noise_d2d_dbm;
  j["noise_radar_dbm"] = c.noise_radar_dbm;
  j["p_bs_dbm"] = c.p_bs_dbm;
  j["p_d2d_dbm"] = c.p_d2d_dbm;
  j["gamma_r_db"] = c.gamma_r_db;
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidScenario("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidScenario("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace isacd2d
