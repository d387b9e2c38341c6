#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "ope/experiment.hpp"
#include "ope/trajectory_io.hpp"

namespace fs = std::filesystem;

namespace {

ope::ExperimentConfig load_config(const std::string& path, const std::string& out_override,
                                  uint64_t seed_override, bool seed_set, int threads) {
  ope::ExperimentConfig config = ope::ExperimentConfig::from_json_file(path);
  if (!out_override.empty()) config.out_dir = out_override;
  if (seed_set) config.seed = seed_override;
  if (threads > 0) config.threads = threads;
  return config;
}

int cmd_truth(const ope::ExperimentConfig& config) {
  const auto truths = ope::run_truth(config);
  for (const auto& [mode, est] : truths)
    std::cout << to_string(mode) << " value " << est.value << " (mc se " << est.mc_standard_error
              << ", N " << est.N << ")\n";
  std::cout << "wrote " << (fs::path(config.out_dir) / "truth.json").string() << "\n";
  return 0;
}

int cmd_run(const ope::ExperimentConfig& config) {
  const auto result = ope::run_experiment(config);
  for (const auto& s : result.summaries) {
    std::cout << "n=" << s.n << " K=" << s.K << " " << to_string(s.method) << " "
              << to_string(s.mode) << ": bias " << s.bias;
    if (s.used > 1) std::cout << " sd " << s.sd;
    if (s.has_se) std::cout << " mean se " << s.mean_se << " cp " << s.cp;
    if (s.excluded > 0) std::cout << " (excluded " << s.excluded << ")";
    std::cout << "\n";
  }
  std::cout << "wrote " << config.out_dir << "/{replicates.csv,summary.csv,truth.json,config.json}\n";
  return 0;
}

int cmd_fit_renewal(const std::string& data_path, const std::string& config_path, int scheme,
                    double tau_quantile, const std::string& out_dir) {
  ope::Dataset data;
  if (!data_path.empty()) {
    data = ope::read_dataset_csv(data_path);
  } else if (!config_path.empty()) {
    const auto config = ope::ExperimentConfig::from_json_file(config_path);
    const auto spec = config.scenario_spec();
    const auto [n, K] = config.grid.front();
    data = ope::gen_dataset(spec, n, K, ope::PolicySpec::uniform(2), config.seed);
    fs::create_directories(out_dir);
    ope::write_dataset_csv((fs::path(out_dir) / "dataset.csv").string(), data);
  } else {
    std::cerr << "fit-renewal: need --data or --config\n";
    return 2;
  }
  const auto violations = ope::validate_dataset(data);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "invalid dataset: " << v << "\n";
    return 1;
  }
  ope::RenewalOptions opts;
  opts.tau_quantile = tau_quantile;
  const auto builder = scheme == 2 ? ope::CovariateBuilder::scheme2(data.d)
                                   : ope::CovariateBuilder::scheme1(data.d);
  const auto fit = ope::fit_renewal(data, builder, opts);

  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "fit_summary.csv");
    os << "coefficient,estimate,se\n";
    const auto se = fit.beta_standard_errors();
    for (int j = 0; j < fit.q(); ++j)
      os << "z" << j << "," << ope::format_double(fit.beta()[j]) << ","
         << ope::format_double(se[j]) << "\n";
    os << "tau," << ope::format_double(fit.tau()) << ",\n";
    os << "bandwidth," << ope::format_double(fit.bandwidth()) << ",\n";
    os << "transitions," << fit.n_transitions() << ",\n";
    os << "newton_iterations," << fit.newton_iterations() << ",\n";
  }
  {
    std::ofstream os(fs::path(out_dir) / "baseline.csv");
    os << "time,increment,cumulative\n";
    for (int r = 0; r < fit.jump_count(); ++r)
      os << ope::format_double(fit.jump_times()[r]) << ","
         << ope::format_double(fit.jump_increments()[r]) << ","
         << ope::format_double(fit.jump_cumulative()[r]) << "\n";
  }
  std::cout << "beta:";
  for (int j = 0; j < fit.q(); ++j) std::cout << " " << fit.beta()[j];
  std::cout << "\ntau " << fit.tau() << ", bandwidth " << fit.bandwidth() << ", "
            << fit.jump_count() << " baseline jumps\n";
  std::cout << "wrote " << out_dir << "/{fit_summary.csv,baseline.csv}\n";
  return 0;
}

int cmd_validate(const std::string& data_path) {
  const ope::Dataset data = ope::read_dataset_csv(data_path);
  const auto violations = ope::validate_dataset(data);
  if (violations.empty()) {
    std::cout << "ok: " << data.trajectories.size() << " trajectories, "
              << data.total_transitions() << " transitions\n";
    return 0;
  }
  for (const auto& v : violations) std::cout << v << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"off-policy evaluation with irregular, outcome-dependent observation times"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_path;
  uint64_t seed = 0;
  int threads = 0;

  auto* truth = app.add_subcommand("truth", "compute Monte Carlo ground-truth values");
  truth->add_option("--config", config_path, "experiment config (JSON)")->required();
  truth->add_option("--out", out_dir, "output directory override");
  auto* truth_seed = truth->add_option("--seed", seed, "base seed override");

  auto* run = app.add_subcommand("run", "run a replicate study");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory override");
  auto* run_seed = run->add_option("--seed", seed, "base seed override");
  run->add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* rep = app.add_subcommand("report", "merge summary.csv files into a comparison table");
  std::vector<std::string> summaries;
  rep->add_option("files", summaries, "summary.csv files")->required();
  std::string report_out = "report";
  rep->add_option("--out", report_out, "output directory");

  auto* fitr = app.add_subcommand("fit-renewal", "fit the observation-process model (diagnostic)");
  fitr->add_option("--data", data_path, "trajectory CSV");
  fitr->add_option("--config", config_path, "config to synthesize a dataset from");
  int scheme = 1;
  double tau_quantile = 0.95;
  fitr->add_option("--scheme", scheme, "covariate scheme (1 or 2)");
  fitr->add_option("--tau-quantile", tau_quantile, "gap-time quantile for tau");
  std::string fit_out = "renewal-fit";
  fitr->add_option("--out", fit_out, "output directory");

  auto* val = app.add_subcommand("validate", "lint a trajectory CSV");
  val->add_option("--data", data_path, "trajectory CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (truth->parsed())
      return cmd_truth(load_config(config_path, out_dir, seed, !truth_seed->empty(), 0));
    if (run->parsed())
      return cmd_run(load_config(config_path, out_dir, seed, !run_seed->empty(), threads));
    if (rep->parsed()) {
      ope::report(summaries, report_out);
      std::cout << "wrote " << report_out << "/{merged.csv,long.csv}\n";
      return 0;
    }
    if (fitr->parsed()) return cmd_fit_renewal(data_path, config_path, scheme, tau_quantile, fit_out);
    if (val->parsed()) return cmd_validate(data_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
