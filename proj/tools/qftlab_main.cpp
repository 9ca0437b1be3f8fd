#include <CLI11.hpp>
#include <iostream>

#include "qftlab/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"truncated-Fock-space laboratory for nonautonomous dynamics and local scattering operators"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int workers = 1;

  auto* run_cmd = app.add_subcommand("run", "execute the checks configured in a JSON experiment");
  run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "output directory (default: config output_dir)");
  run_cmd->add_option("--workers", workers, "concurrent check workers");

  std::string axis;
  std::string values_csv;
  auto* sweep_cmd = app.add_subcommand("sweep", "re-run the configured observables over one axis");
  sweep_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
  sweep_cmd->add_option("--axis", axis, "dt | n_max | K | approx_level | amplitude")->required();
  sweep_cmd->add_option("--values", values_csv, "comma-separated axis values")->required();
  sweep_cmd->add_option("--out", out_dir, "output directory (default: config output_dir)");
  sweep_cmd->add_option("--workers", workers, "concurrent sweep workers");

  std::string report_path;
  auto* check_cmd = app.add_subcommand("check", "re-validate the tolerances of a report");
  check_cmd->add_option("report", report_path, "report.json produced by run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const qftlab::ExperimentConfig cfg = qftlab::load_config(config_path);
      const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
      const qftlab::RunReport report = qftlab::run_experiment(cfg, dir, workers);
      for (const auto& c : report.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << c.value
                  << "  tol(" << c.cmp << ")=" << c.tolerance << "\n";
      }
      std::cout << "report: " << dir << "/report.json\n";
      return report.all_pass() ? 0 : 1;
    }
    if (sweep_cmd->parsed()) {
      const qftlab::ExperimentConfig cfg = qftlab::load_config(config_path);
      const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
      std::vector<qftlab::Real> values;
      std::stringstream ss(values_csv);
      std::string item;
      while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
      const qftlab::SweepResult result = qftlab::run_sweep(cfg, axis, values, dir, workers);
      std::cout << "sweep table: " << result.csv_path << "\n";
      for (const auto& [name, slope] : result.slopes)
        std::cout << "slope " << name << " = " << slope << "\n";
      return 0;
    }
    if (check_cmd->parsed()) {
      const int rc = qftlab::check_report(report_path);
      std::cout << (rc == 0 ? "all tolerances hold" : rc == 1 ? "check failure" : "malformed report")
                << "\n";
      return rc;
    }
  } catch (const qftlab::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
