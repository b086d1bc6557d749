#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reghec/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = reghec::cli;

  CLI::App app{"Multiview registration for hand-eye calibration"};
  app.require_subcommand(1);

  std::string cal_config, cal_mode, cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "Run the calibration pipeline");
  calibrate->add_option("--config", cal_config, "JSON run configuration")->required();
  calibrate->add_option("--mode", cal_mode, "eye-in-hand or eye-to-hand (overrides config)");
  calibrate->add_option("--out", cal_out, "report path (overrides config)");

  cli::SimulateConfig sim_config;
  std::string scene_name = "sphere", sim_mode = "eye-in-hand";
  std::vector<double> dims;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic fixture");
  simulate->add_option("--scene", scene_name, "plane|sphere|cylinder|cone|cluster|blob");
  simulate->add_option("--views", sim_config.views, "number of views");
  simulate->add_option("--noise", sim_config.noise_sigma, "sensor noise sigma, meters");
  simulate->add_option("--seed", sim_config.seed, "base seed");
  simulate->add_option("--density", sim_config.sample_density, "points per square meter");
  simulate->add_option("--dims", dims, "scene dimensions, meters")->expected(1, 3);
  simulate->add_option("--mode", sim_mode, "eye-in-hand or eye-to-hand");
  simulate->add_flag("--shared-sampling", sim_config.shared_sampling,
                     "cull every view from one surface sampling");
  simulate->add_option("--out", sim_config.out_dir, "output directory")->required();

  std::string bench_config, bench_out;
  int bench_runs = 100;
  auto* bench = app.add_subcommand("benchmark-aa",
                                   "Accelerated vs plain refinement from random starts");
  bench->add_option("--config", bench_config, "JSON run configuration")->required();
  bench->add_option("--runs", bench_runs, "number of seeded starts");
  bench->add_option("--out", bench_out, "summary path (stdout when omitted)");

  std::string assess_poses, assess_gt;
  auto* assess = app.add_subcommand("assess", "Repeatability of measured poses");
  assess->add_option("--poses", assess_poses, "pose CSV")->required();
  assess->add_option("--ground-truth", assess_gt, "single-pose CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*calibrate) {
      cli::RunConfig config = cli::load_config(cal_config);
      if (!cal_mode.empty()) config.mode = cli::mode_from_name(cal_mode);
      if (!cal_out.empty()) config.output_path = cal_out;
      const auto report = cli::cmd_calibrate(config);
      std::cout << (report.converged ? "converged" : "did not converge")
                << " after " << report.iterations << " iterations, "
                << report.g_calls << " map calls";
      if (!config.output_path.empty())
        std::cout << "; report written to " << config.output_path;
      std::cout << "\n";
      return report.converged ? 0 : 2;
    }
    if (*simulate) {
      sim_config.kind = cli::scene_from_name(scene_name);
      sim_config.mode = cli::mode_from_name(sim_mode);
      for (std::size_t i = 0; i < dims.size() && i < 3; ++i)
        sim_config.dimensions[static_cast<int>(i)] = dims[i];
      const auto out = cli::cmd_simulate(sim_config);
      std::cout << out.cloud_paths.size() << " views, " << out.pose_path
                << " and " << out.ground_truth_path << " written\n";
      return 0;
    }
    if (*bench) {
      const auto config = cli::load_config(bench_config);
      const auto summary = cli::cmd_benchmark_aa(config, bench_runs);
      const std::string text = cli::summary_to_json(summary);
      if (bench_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(bench_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + bench_out + " for writing");
        out << text;
        std::cout << "summary written to " << bench_out << "\n";
      }
      return 0;
    }
    if (*assess) {
      std::cout << cli::metrics_to_json(cli::cmd_assess(assess_poses, assess_gt));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
