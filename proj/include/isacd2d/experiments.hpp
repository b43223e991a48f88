#pragma once

// Seeded experiment drivers behind the CLI: parameter sweeps over the
// schemes, the rank-one census, beampatterns and convergence traces. Every
// draw d of a run with base seed S uses seed S + d for both the D2D placement
// and the channel phases, and that seed is written to each row.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "isacd2d/baselines.hpp"
#include "isacd2d/config.hpp"
#include "isacd2d/metrics.hpp"
#include "isacd2d/sca.hpp"

#ifndef ISACD2D_VERSION
#define ISACD2D_VERSION "0.0.0"
#endif

namespace isacd2d {

inline constexpr const char* kToolVersion = ISACD2D_VERSION;

inline const std::vector<std::string>& all_schemes() {
  static const std::vector<std::string> s{"proposed", "comm-only", "zf", "mrt", "sensing-only"};
  return s;
}

inline void validate_schemes(const std::vector<std::string>& schemes) {
  if (schemes.empty()) throw InvalidScenario("scheme list is empty");
  for (const auto& s : schemes)
    if (std::find(all_schemes().begin(), all_schemes().end(), s) == all_schemes().end())
      throw InvalidScenario("unknown scheme: " + s);
}

/// Shortest round-trip text for a double; "nan" for NaN.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. Results must be stored by index.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// One scheme on one realized scenario.

struct SchemeOutcome {
  std::string scheme;
  std::string status = "ok";
  Metrics metrics;
  Solution solution;
  int iterations = 0;
  std::vector<std::string> warnings;
  std::optional<RunReport> report;
  std::optional<SensingResult> sensing;
};

struct SchemeSettings {
  ScaSettings sca;
  SensingSettings sensing;
};

inline std::string status_of(const std::exception& e) {
  if (dynamic_cast<const InfeasibleRadarConstraint*>(&e)) return "infeasible-radar";
  if (dynamic_cast<const SolverFailure*>(&e)) return "solver-failure";
  if (dynamic_cast<const NumericalFailure*>(&e)) return "numerical-failure";
  if (dynamic_cast<const RandomizationFailure*>(&e)) return "randomization-failure";
  return "error";
}

/// Runs the requested schemes in a fixed order; comm-only also restarts from the
/// proposed scheme's final iterate when that scheme ran successfully.
inline std::vector<SchemeOutcome> run_schemes(const std::vector<std::string>& schemes, const ChannelSet& ch,
                                              const Scenario& s, const SchemeSettings& st = {}) {
  validate_schemes(schemes);
  std::vector<SchemeOutcome> out;
  std::optional<Iterate> proposed_iterate;
  auto wants = [&](const char* name) { return std::find(schemes.begin(), schemes.end(), name) != schemes.end(); };
  for (const auto& name : all_schemes()) {
    if (!wants(name.c_str())) continue;
    SchemeOutcome o;
    o.scheme = name;
    try {
      if (name == "proposed" || name == "comm-only") {
        RunReport rep = name == "proposed" ? sca_solve(ch, s, st.sca) : comm_only(ch, s, st.sca, proposed_iterate);
        if (name == "proposed") proposed_iterate = rep.final_iterate;
        o.status = rep.status;
        o.solution = rep.solution;
        o.metrics = rep.metrics;
        o.iterations = static_cast<int>(rep.iterations.size());
        o.warnings = rep.warnings;
        o.report = std::move(rep);
      } else if (name == "mrt") {
        o.solution = mrt(ch, s);
        o.metrics = evaluate(ch, o.solution);
      } else if (name == "zf") {
        o.solution = zf(ch, s, &o.warnings);
        o.metrics = evaluate(ch, o.solution);
      } else {
        SensingResult r = sensing_only(ch, s, st.sensing);
        o.solution = r.solution;
        o.metrics = evaluate(ch, o.solution);
        o.iterations = r.subproblem_solves;
        o.warnings = r.notes;
        o.sensing = std::move(r);
      }
    } catch (const std::exception& e) {
      o.status = status_of(e);
      o.warnings.push_back(e.what());
      o.metrics.sum_rate = std::numeric_limits<double>::quiet_NaN();
      o.metrics.radar_sinr = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(o));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps.

enum class SweepParameter { kGammaR, kPBs, kPM };

inline const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::kGammaR: return "gamma_r";
    case SweepParameter::kPBs: return "p_bs";
    case SweepParameter::kPM: return "p_m";
  }
  return "unknown";
}

inline SweepParameter parse_sweep_parameter(const std::string& s) {
  if (s == "gamma_r") return SweepParameter::kGammaR;
  if (s == "p_bs") return SweepParameter::kPBs;
  if (s == "p_m") return SweepParameter::kPM;
  throw InvalidScenario("unknown sweep parameter: " + s + " (gamma_r | p_bs | p_m)");
}

struct SweepSpec {
  std::vector<std::string> schemes = all_schemes();
  SweepParameter parameter = SweepParameter::kGammaR;
  std::vector<double> values{10.0, 12.0, 14.0, 16.0, 18.0, 20.0};  // dB or dBm
  int monte_carlo = 1;
  ExperimentConfig config;
  std::uint64_t seed = 0;
  int parallel = 1;
  SchemeSettings settings;

  void validate() const {
    validate_schemes(schemes);
    if (values.empty()) throw InvalidScenario("sweep grid is empty");
    if (monte_carlo < 1) throw InvalidScenario("monte_carlo must be >= 1");
    config.validate();
  }
};

struct SweepRow {
  std::string scheme;
  double gamma_r_db = 0.0;
  double p_bs_dbm = 0.0;
  double p_m_dbm = 0.0;
  std::uint64_t seed = 0;
  double sum_rate = 0.0;
  double radar_sinr_db = 0.0;
  int iters = 0;
  std::string status;
};

inline ExperimentConfig apply_parameter(ExperimentConfig c, SweepParameter p, double v) {
  switch (p) {
    case SweepParameter::kGammaR: c.gamma_r_db = v; break;
    case SweepParameter::kPBs: c.p_bs_dbm = v; break;
    case SweepParameter::kPM: std::fill(c.p_d2d_dbm.begin(), c.p_d2d_dbm.end(), v); break;
  }
  return c;
}

/// One row per (grid value, draw, scheme), ordered in that nesting.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const int nv = static_cast<int>(spec.values.size());
  const int jobs = nv * spec.monte_carlo;
  std::vector<std::vector<SweepRow>> per_job(jobs);
  parallel_for(jobs, spec.parallel, [&](int j) {
    const double value = spec.values[j / spec.monte_carlo];
    const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(j % spec.monte_carlo);
    const ExperimentConfig cfg = apply_parameter(spec.config, spec.parameter, value);
    const double p_m = cfg.p_d2d_dbm.empty() ? std::numeric_limits<double>::quiet_NaN() : cfg.p_d2d_dbm.front();
    std::vector<SchemeOutcome> outs;
    try {
      const Scenario s = cfg.scenario(seed);
      outs = run_schemes(spec.schemes, realize_channels(s, seed), s, spec.settings);
    } catch (const std::exception& e) {
      for (const auto& name : spec.schemes) {
        SchemeOutcome o;
        o.scheme = name;
        o.status = status_of(e);
        o.metrics.sum_rate = o.metrics.radar_sinr = std::numeric_limits<double>::quiet_NaN();
        outs.push_back(o);
      }
    }
    for (const auto& o : outs) {
      SweepRow r;
      r.scheme = o.scheme;
      r.gamma_r_db = cfg.gamma_r_db;
      r.p_bs_dbm = cfg.p_bs_dbm;
      r.p_m_dbm = p_m;
      r.seed = seed;
      r.sum_rate = o.metrics.sum_rate;
      r.radar_sinr_db = std::isnan(o.metrics.radar_sinr) ? o.metrics.radar_sinr : to_db(o.metrics.radar_sinr);
      r.iters = o.iterations;
      r.status = o.status;
      per_job[j].push_back(r);
    }
  });
  std::vector<SweepRow> rows;
  for (auto& v : per_job) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

inline const char* kSweepHeader = "scheme,gamma_r_db,p_bs_dbm,p_m_dbm,seed,sum_rate_bps_hz,radar_sinr_db,iters,status";

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepHeader << '\n';
  for (const auto& r : rows)
    os << r.scheme << ',' << fmt(r.gamma_r_db) << ',' << fmt(r.p_bs_dbm) << ',' << fmt(r.p_m_dbm) << ','
       << r.seed << ',' << fmt(r.sum_rate) << ',' << fmt(r.radar_sinr_db) << ',' << r.iters << ',' << r.status
       << '\n';
}

/// Means over draws of the rows whose status is "ok" (or "solver-stalled", which still carries a point).
struct SummaryRow {
  std::string scheme;
  double value = 0.0;
  int draws = 0;
  int ok = 0;
  double mean_sum_rate = 0.0;
  double mean_radar_sinr_db = 0.0;
};

inline std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows, SweepParameter p) {
  auto key_value = [&](const SweepRow& r) {
    switch (p) {
      case SweepParameter::kGammaR: return r.gamma_r_db;
      case SweepParameter::kPBs: return r.p_bs_dbm;
      case SweepParameter::kPM: return r.p_m_dbm;
    }
    return 0.0;
  };
  std::vector<SummaryRow> out;
  for (const auto& r : rows) {
    const double v = key_value(r);
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) { return s.scheme == r.scheme && s.value == v; });
    if (it == out.end()) {
      out.push_back({r.scheme, v, 0, 0, 0.0, 0.0});
      it = out.end() - 1;
    }
    ++it->draws;
    if (!std::isnan(r.sum_rate)) {
      ++it->ok;
      it->mean_sum_rate += r.sum_rate;
      it->mean_radar_sinr_db += r.radar_sinr_db;
    }
  }
  for (auto& s : out) {
    if (s.ok > 0) {
      s.mean_sum_rate /= s.ok;
      s.mean_radar_sinr_db /= s.ok;
    } else {
      s.mean_sum_rate = s.mean_radar_sinr_db = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows, SweepParameter p) {
  os << "scheme," << to_string(p) << ",draws,ok,mean_sum_rate_bps_hz,mean_radar_sinr_db\n";
  for (const auto& r : rows)
    os << r.scheme << ',' << fmt(r.value) << ',' << r.draws << ',' << r.ok << ',' << fmt(r.mean_sum_rate) << ','
       << fmt(r.mean_radar_sinr_db) << '\n';
}

// ---------------------------------------------------------------------------
// Rank-one census: proposed-scheme covariances at random operating points.

struct CensusSpec {
  int draws = 200;
  std::uint64_t seed = 0;
  ExperimentConfig config;
  double threshold = 1e5;
  double gamma_lo_db = 10.0, gamma_hi_db = 20.0;
  double p_m_lo_dbm = 0.7, p_m_hi_dbm = 20.0;
  double p_bs_lo_dbm = 20.0, p_bs_hi_dbm = 120.0;
  int parallel = 1;
  ScaSettings sca;

  void validate() const {
    if (draws < 1) throw InvalidScenario("census needs at least one draw");
    if (!(threshold >= 1.0)) throw InvalidScenario("census threshold must be >= 1");
    config.validate();
  }
};

struct CensusRow {
  std::uint64_t seed = 0;
  double gamma_r_db = 0.0;
  double p_bs_dbm = 0.0;
  double p_m_dbm = 0.0;
  // λ1/λ2 per W_k for every SCA iterate, outer index = iteration; empty when the run failed
  std::vector<std::vector<double>> ratios;
  std::string status = "ok";
};

struct CensusResult {
  std::vector<CensusRow> rows;
  std::vector<double> fraction;  // per CU: rank-one share over all collected iterates
  int successful = 0;
  int matrices = 0;  // iterates pooled into the fraction
};

/// Share of matrices per CU index whose λ1/λ2 exceeds the threshold.
inline std::vector<double> rank_one_fraction(const std::vector<std::vector<double>>& ratios, double threshold) {
  std::vector<double> hits;
  int n = 0;
  for (const auto& r : ratios) {
    if (r.empty()) continue;
    if (hits.empty()) hits.assign(r.size(), 0.0);
    for (std::size_t k = 0; k < r.size() && k < hits.size(); ++k) hits[k] += r[k] > threshold ? 1.0 : 0.0;
    ++n;
  }
  for (auto& h : hits) h /= n;
  return hits;
}

inline CensusResult rank_one_census(const CensusSpec& spec) {
  spec.validate();
  CensusResult res;
  res.rows.resize(spec.draws);
  parallel_for(spec.draws, spec.parallel, [&](int d) {
    CensusRow& row = res.rows[d];
    row.seed = spec.seed + static_cast<std::uint64_t>(d);
    Rng rng(row.seed);
    row.gamma_r_db = detail::uniform(rng, spec.gamma_lo_db, spec.gamma_hi_db);
    row.p_m_dbm = detail::uniform(rng, spec.p_m_lo_dbm, spec.p_m_hi_dbm);
    row.p_bs_dbm = detail::uniform(rng, spec.p_bs_lo_dbm, spec.p_bs_hi_dbm);
    ExperimentConfig cfg = spec.config;
    cfg.gamma_r_db = row.gamma_r_db;
    cfg.p_bs_dbm = row.p_bs_dbm;
    std::fill(cfg.p_d2d_dbm.begin(), cfg.p_d2d_dbm.end(), row.p_m_dbm);
    try {
      const Scenario s = cfg.scenario(row.seed);
      const RunReport rep = sca_solve(realize_channels(s, row.seed), s, spec.sca);
      for (const auto& it : rep.iterations) row.ratios.push_back(it.rank_ratios);
      row.status = rep.status;
    } catch (const std::exception& e) {
      row.status = status_of(e);
    }
  });
  std::vector<std::vector<double>> ratios;
  for (const auto& r : res.rows) {
    ratios.insert(ratios.end(), r.ratios.begin(), r.ratios.end());
    if (!r.ratios.empty()) ++res.successful;
  }
  res.matrices = static_cast<int>(ratios.size());
  res.fraction = rank_one_fraction(ratios, spec.threshold);
  return res;
}

inline void write_census_csv(std::ostream& os, const CensusResult& res, int num_cus) {
  os << "seed,gamma_r_db,p_bs_dbm,p_m_dbm,iteration";
  for (int k = 0; k < num_cus; ++k) os << ",ratio_w" << k + 1;
  os << ",status\n";
  static const std::vector<double> none;
  for (const auto& r : res.rows) {
    // A failed draw still gets one line (iteration 0, nan ratios).
    const std::size_t lines = std::max<std::size_t>(r.ratios.size(), 1);
    for (std::size_t i = 0; i < lines; ++i) {
      const auto& v = r.ratios.empty() ? none : r.ratios[i];
      os << r.seed << ',' << fmt(r.gamma_r_db) << ',' << fmt(r.p_bs_dbm) << ',' << fmt(r.p_m_dbm) << ','
         << (r.ratios.empty() ? 0 : i + 1);
      for (int k = 0; k < num_cus; ++k)
        os << ',' << (k < static_cast<int>(v.size()) ? fmt(v[k]) : std::string("nan"));
      os << ',' << r.status << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Beampatterns and convergence traces.

inline std::vector<double> angle_grid(double lo_deg, double hi_deg, double step_deg) {
  if (!(step_deg > 0.0) || hi_deg < lo_deg) throw InvalidScenario("invalid angle grid");
  std::vector<double> g;
  const int n = static_cast<int>(std::floor((hi_deg - lo_deg) / step_deg + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) g.push_back(lo_deg + i * step_deg);
  return g;
}

struct BeampatternRow {
  std::string scheme;
  double angle_deg = 0.0;
  double p1_db = 0.0;
  double p2_db = 0.0;
  double p3_db = 0.0;
};

/// p1 in dBW, p2 and p3 after normalization by u^H u.
inline std::vector<BeampatternRow> emit_beampatterns(const ChannelSet& ch,
                                                     const std::vector<std::pair<std::string, Solution>>& sols,
                                                     const std::vector<double>& grid_deg) {
  std::vector<BeampatternRow> rows;
  for (const auto& [name, sol] : sols) {
    const Beampatterns bp = beampatterns(ch, sol, grid_deg);
    for (std::size_t i = 0; i < grid_deg.size(); ++i)
      rows.push_back({name, grid_deg[i], to_db(bp.p1[i]), to_db(bp.p2[i]), to_db(bp.p3[i])});
  }
  return rows;
}

inline void write_beampattern_csv(std::ostream& os, const std::vector<BeampatternRow>& rows) {
  os << "scheme,angle_deg,p1_db,p2_db,p3_db\n";
  for (const auto& r : rows)
    os << r.scheme << ',' << fmt(r.angle_deg) << ',' << fmt(r.p1_db) << ',' << fmt(r.p2_db) << ',' << fmt(r.p3_db)
       << '\n';
}

struct ConvergeRow {
  int n_antennas = 0;
  std::uint64_t seed = 0;
  IterationRecord record;
  double rel_change = 0.0;  // vs the previous iteration; nan at the first
};

/// Proposed-scheme objective traces for each array size (N_t = N_r = n).
inline std::vector<ConvergeRow> converge(const ExperimentConfig& base, const std::vector<int>& sizes,
                                         std::uint64_t seed, const ScaSettings& st,
                                         std::vector<RunReport>* reports = nullptr) {
  std::vector<ConvergeRow> rows;
  for (int n : sizes) {
    ExperimentConfig cfg = base;
    cfg.n_tx = cfg.n_rx = n;
    const Scenario s = cfg.scenario(seed);
    RunReport rep = sca_solve(realize_channels(s, seed), s, st);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rep.iterations) {
      ConvergeRow c{n, seed, r, std::abs(r.objective - prev) / std::abs(prev)};
      rows.push_back(c);
      prev = r.objective;
    }
    if (reports) reports->push_back(std::move(rep));
  }
  return rows;
}

inline void write_converge_csv(std::ostream& os, const std::vector<ConvergeRow>& rows) {
  os << "n_antennas,seed,iteration,objective,sum_rate_bps_hz,radar_sinr_db,rel_change,conic_iterations,"
        "conic_status,kept_previous\n";
  for (const auto& r : rows)
    os << r.n_antennas << ',' << r.seed << ',' << r.record.iteration << ',' << fmt(r.record.objective) << ','
       << fmt(r.record.sum_rate) << ',' << fmt(to_db(r.record.radar_sinr)) << ',' << fmt(r.rel_change) << ','
       << r.record.conic_iterations << ',' << r.record.conic_status << ',' << (r.record.kept_previous ? 1 : 0)
       << '\n';
}

// ---------------------------------------------------------------------------
// Structured-text records.

inline nlohmann::json to_json(const conic::ToleranceSet& t) {
  return {{"primal", t.primal}, {"dual", t.dual}, {"gap", t.gap}, {"max_iterations", t.max_iterations},
          {"infeasibility", t.infeasibility}};
}

inline nlohmann::json to_json(const Metrics& m) {
  return {{"sum_rate_bps_hz", m.sum_rate}, {"radar_sinr_db", to_db(m.radar_sinr)}, {"rate_cu", m.rate_cu},
          {"rate_d2d", m.rate_d2d},       {"sinr_cu", m.sinr_cu},                 {"sinr_d2d", m.sinr_d2d}};
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json it = nlohmann::json::array();
  for (const auto& x : r.iterations)
    it.push_back({{"iteration", x.iteration},
                  {"objective", x.objective},
                  {"sum_rate_bps_hz", x.sum_rate},
                  {"radar_sinr_db", to_db(x.radar_sinr)},
                  {"conic_status", x.conic_status},
                  {"conic_iterations", x.conic_iterations},
                  {"residuals", {{"primal", x.residuals.primal_rel}, {"dual", x.residuals.dual_rel}, {"gap", x.residuals.gap_rel}}},
                  {"rank_ratios", x.rank_ratios},
                  {"kept_previous", x.kept_previous}});
  nlohmann::json p = nlohmann::json::array();
  for (int m = 0; m < r.final_iterate.p.size(); ++m) p.push_back(r.final_iterate.p(m));
  return {{"scheme", r.scheme},
          {"status", r.status},
          {"converged", r.converged},
          {"log_handling", r.log_handling},
          {"randomized", r.randomized},
          {"rank_ratios", r.rank_ratios},
          {"d2d_powers_w", p},
          {"metrics", to_json(r.metrics)},
          {"iterations", it},
          {"warnings", r.warnings},
          {"wall_time_s", r.wall_time_s}};
}

inline nlohmann::json run_metadata(const std::string& command, const ExperimentConfig& cfg, std::uint64_t seed,
                                   const ScaSettings& sca, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json j{{"tool", "isacd2d_cli"},
                   {"version", kToolVersion},
                   {"command", command},
                   {"seed", seed},
                   {"rng_algorithm", kRngAlgorithm},
                   {"seed_rule", "draw d uses seed + d for placement and channel phases"},
                   {"sca", {{"max_iters", sca.max_iters},
                            {"rel_tol", sca.rel_tol},
                            {"randomization_samples", sca.randomization_samples},
                            {"rank_ratio_threshold", sca.rank_ratio_threshold},
                            {"log_handling", to_string(sca.log_handling)},
                            {"conic_tolerances", to_json(sca.tolerances)}}},
                   {"config", config_to_json(cfg)}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

}  // namespace isacd2d
