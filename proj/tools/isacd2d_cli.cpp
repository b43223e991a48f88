// isacd2d_cli: seeded experiment runs writing CSV plus a run-metadata JSON file.
//
//   isacd2d_cli sweep       --param gamma_r --values 10,12,14,16,18,20 --draws 20
//   isacd2d_cli census      --draws 200
//   isacd2d_cli beampattern --angle-step 0.5
//   isacd2d_cli converge    --sizes 16,32
//
// Common flags: --config FILE --seed N --out-dir DIR --schemes a,b --parallel N

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isacd2d/experiments.hpp"

namespace fs = std::filesystem;
using namespace isacd2d;

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::vector<std::string> schemes = all_schemes();
  int parallel = 1;
  int max_iters = 30;

  ExperimentConfig config() const { return config_path.empty() ? reference_config() : load_config(config_path); }
  ScaSettings sca() const {
    ScaSettings s;
    s.max_iters = max_iters;
    return s;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "Experiment config (JSON); default is the reference geometry")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Base seed; draw d uses seed + d");
  app->add_option("--out-dir", c.out_dir, "Output directory (created if missing)");
  app->add_option("--schemes", c.schemes, "Comma-separated subset of proposed,comm-only,zf,mrt,sensing-only")
      ->delimiter(',');
  app->add_option("--parallel", c.parallel, "Worker threads for independent draws")->check(CLI::PositiveNumber);
  app->add_option("--max-iters", c.max_iters, "SCA iteration cap")->check(CLI::PositiveNumber);
}

std::ofstream open_out(const Common& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  const fs::path path = fs::path(c.out_dir) / name;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  std::cerr << "wrote " << path.string() << '\n';
  return os;
}

void write_json(const Common& c, const std::string& name, const nlohmann::json& j) {
  open_out(c, name) << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ISAC full-duplex BS with D2D underlay: experiment runner"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Common common;

  auto* sweep = app.add_subcommand("sweep", "Sum rate and radar SINR over a parameter grid");
  add_common(sweep, common);
  std::string param = "gamma_r";
  std::vector<double> values{10, 12, 14, 16, 18, 20};
  int draws = 1;
  sweep->add_option("--param", param, "gamma_r (dB) | p_bs (dBm) | p_m (dBm)");
  sweep->add_option("--values", values, "Grid values")->delimiter(',');
  sweep->add_option("--draws", draws, "Placement/channel draws per grid value")->check(CLI::PositiveNumber);

  auto* census = app.add_subcommand("census", "Share of rank-one SCA covariances at random operating points");
  add_common(census, common);
  int census_draws = 200;
  double threshold = 1e5;
  census->add_option("--draws", census_draws, "Number of random operating points")->check(CLI::PositiveNumber);
  census->add_option("--threshold", threshold, "lambda1/lambda2 threshold");

  auto* beam = app.add_subcommand("beampattern", "Transmit, receive and cascaded beampatterns per scheme");
  add_common(beam, common);
  double step = 0.5;
  beam->add_option("--angle-step", step, "Grid step over [-90, 90] degrees")->check(CLI::PositiveNumber);

  auto* conv = app.add_subcommand("converge", "Proposed-scheme objective trace per array size");
  add_common(conv, common);
  std::vector<int> sizes{16, 32};
  conv->add_option("--sizes", sizes, "N_t = N_r values")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    validate_schemes(common.schemes);
    const ExperimentConfig cfg = common.config();
    const ScaSettings sca = common.sca();

    if (*sweep) {
      SweepSpec spec;
      spec.schemes = common.schemes;
      spec.parameter = parse_sweep_parameter(param);
      spec.values = values;
      spec.monte_carlo = draws;
      spec.config = cfg;
      spec.seed = common.seed;
      spec.parallel = common.parallel;
      spec.settings.sca = sca;
      const auto rows = run_sweep(spec);
      auto os = open_out(common, "sweep.csv");
      write_sweep_csv(os, rows);
      auto ss = open_out(common, "sweep_summary.csv");
      write_summary_csv(ss, summarize(rows, spec.parameter), spec.parameter);
      write_json(common, "run_metadata.json",
                 run_metadata("sweep", cfg, common.seed, sca,
                              {{"parameter", param}, {"values", values}, {"draws", draws}, {"schemes", common.schemes}}));
    } else if (*census) {
      CensusSpec spec;
      spec.draws = census_draws;
      spec.seed = common.seed;
      spec.config = cfg;
      spec.threshold = threshold;
      spec.parallel = common.parallel;
      spec.sca = sca;
      const CensusResult res = rank_one_census(spec);
      auto os = open_out(common, "census.csv");
      write_census_csv(os, res, static_cast<int>(cfg.cus.size()));
      write_json(common, "run_metadata.json",
                 run_metadata("census", cfg, common.seed, sca,
                              {{"draws", census_draws},
                               {"threshold", threshold},
                               {"successful", res.successful},
                               {"matrices", res.matrices},
                               {"rank_one_fraction", res.fraction}}));
      std::cout << res.successful << "/" << census_draws << " draws solved, " << res.matrices << " iterates\n";
      for (std::size_t k = 0; k < res.fraction.size(); ++k)
        std::cout << "W" << k + 1 << " rank-one fraction " << res.fraction[k] << '\n';
    } else if (*beam) {
      const Scenario s = cfg.scenario(common.seed);
      const ChannelSet ch = realize_channels(s, common.seed);
      SchemeSettings st;
      st.sca = sca;
      std::vector<std::pair<std::string, Solution>> sols;
      nlohmann::json metrics = nlohmann::json::object();
      for (const auto& o : run_schemes(common.schemes, ch, s, st)) {
        metrics[o.scheme] = {{"status", o.status}, {"warnings", o.warnings}};
        if (std::isnan(o.metrics.sum_rate)) continue;
        metrics[o.scheme]["metrics"] = to_json(o.metrics);
        sols.emplace_back(o.scheme, o.solution);
      }
      auto os = open_out(common, "beampattern.csv");
      write_beampattern_csv(os, emit_beampatterns(ch, sols, angle_grid(-90.0, 90.0, step)));
      write_json(common, "run_metadata.json",
                 run_metadata("beampattern", cfg, common.seed, sca, {{"angle_step_deg", step}, {"schemes", metrics}}));
    } else if (*conv) {
      std::vector<RunReport> reports;
      const auto rows = converge(cfg, sizes, common.seed, sca, &reports);
      auto os = open_out(common, "converge.csv");
      write_converge_csv(os, rows);
      nlohmann::json reps = nlohmann::json::array();
      for (const auto& r : reports) reps.push_back(to_json(r));
      write_json(common, "converge_reports.json", reps);
      write_json(common, "run_metadata.json", run_metadata("converge", cfg, common.seed, sca, {{"sizes", sizes}}));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
