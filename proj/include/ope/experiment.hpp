#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ope/variance.hpp"

namespace ope {

// Config for one replicate study: scenario, target policy, evaluation grid,
// and every knob the pipeline has, with the defaults used throughout the
// benchmark scenarios. Parsed from / echoed to JSON.
struct ExperimentConfig {
  std::string scenario = "scenario1";
  // optional overrides of the named scenario's parameters
  double baseline_rate = 1.0;
  double state_noise_sd = 0.25;
  double reward_noise_sd = 0.25;
  double gamma = 0.7;
  std::vector<double> alpha;  // (a0, a1.., a2); empty = scenario default
  std::vector<std::pair<int, int>> grid = {{400, 10}};
  std::vector<Method> methods = {Method::Naive, Method::Standard, Method::Modulated};
  std::vector<RewardMode> reward_modes = {RewardMode::Cumulative, RewardMode::Integrated};
  int replicates = 200;
  uint64_t seed = 20240801;

  BasisSpec basis;
  RenewalOptions renewal;
  int scheme = 1;
  bool bounded_gap_covariate = true;
  double weight_floor = 1e-6;
  int quadrature_nodes = 64;

  // reference distribution per reward mode; cumulative defaults to the
  // uniform box [-1,1] x [0,2], integrated to [-0.2,0.2] x [0,1]
  ReferenceDistribution ref_cumulative = ReferenceDistribution::uniform_box1(-1.0, 1.0, 0.0, 2.0);
  ReferenceDistribution ref_integrated =
      ReferenceDistribution::uniform_box1(-0.2, 0.2, 0.0, 1.0);

  long truth_N = 100000;
  double tail_tol = 1e-6;
  uint64_t truth_seed = 424243;

  std::string out_dir = "results";
  int threads = 0;  // 0 = hardware concurrency

  std::vector<double> policy_alpha() const;  // alpha or the scenario default
  PolicySpec target_policy() const;
  ScenarioSpec scenario_spec() const;
  const ReferenceDistribution& reference(RewardMode mode) const {
    return mode == RewardMode::Cumulative ? ref_cumulative : ref_integrated;
  }

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct ReplicateRecord {
  int replicate = 0;
  int n = 0, K = 0;
  Method method = Method::Standard;
  RewardMode mode = RewardMode::Cumulative;
  bool ok = false;
  std::string message;
  double value = 0.0, se = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  bool has_se = false;
  bool covered = false;
  long n_K = 0;
  double design_cond = 0.0;
  int newton_iters = 0;
  long floored_weights = 0;
};

struct MethodSummary {
  int n = 0, K = 0;
  Method method;
  RewardMode mode;
  double truth = 0.0;
  int used = 0;       // replicates included
  int excluded = 0;   // failed replicates
  double bias = 0.0;
  double sd = 0.0;    // NaN when fewer than 2 replicates
  double mean_se = 0.0;
  double cp = 0.0;
  bool has_se = false;
};

struct ExperimentResult {
  std::map<RewardMode, TruthEstimate> truths;
  std::vector<ReplicateRecord> records;
  std::vector<MethodSummary> summaries;
};

// Monte Carlo truths per reward mode, cached in <out_dir>/truth.json keyed by
// every generating parameter.
std::map<RewardMode, TruthEstimate> run_truth(const ExperimentConfig& config,
                                              bool write_files = true);

// Full study: truths, parallel replicates, replicates.csv / summary.csv /
// truth.json / config.json under config.out_dir. Deterministic for a given
// base seed regardless of thread count.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files = true);

// Merges summary.csv files into the wide comparison table (plus a long-format
// companion for plotting). Inputs must share the summary schema.
void report(const std::vector<std::string>& summary_files, const std::string& out_dir);

// Fitted Q-model artifact: coefficients plus the frozen feature map (knots
// and degree per margin), enough to re-evaluate the model exactly.
std::string qmodel_to_json(const QFit& fit, const FeatureMap& map);
std::pair<QFit, FeatureMap> qmodel_from_json(const std::string& text);

}  // namespace ope
