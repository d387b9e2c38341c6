#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ope/policy.hpp"
#include "ope/reference.hpp"
#include "ope/rng.hpp"
#include "ope/trajectory.hpp"

namespace ope {

enum class StateModel { S1, S2, S3 };
enum class GapModel { X1, X2, X3 };

// Generative model for one benchmark scenario: a state recursion, a
// gap-time intensity model, and a constant baseline intensity. The state
// recursion and the gap intensity may depend on each other's freshly drawn
// value, which fixes the generation order:
//   - GapModel::X3 needs S_{k+1} before X_{k+1} (state first),
//   - StateModel::S3 needs X_{k+1} before S_{k+1} (gap first).
struct ScenarioSpec {
  StateModel state_model = StateModel::S1;
  GapModel gap_model = GapModel::X1;
  double baseline_rate = 1.0;  // constant lambda_0
  double state_noise_sd = 0.25;
  double reward_noise_sd = 0.25;
  bool custom = false;  // allow pairs outside the four named scenarios

  bool gap_first() const { return state_model == StateModel::S3; }

  void check() const;

  // "scenario1".."scenario4"
  static ScenarioSpec by_name(const std::string& name);
};

struct TruthEstimate {
  double value = 0.0;
  double mc_standard_error = 0.0;
  long N = 0;
  RewardMode reward_mode = RewardMode::Cumulative;
};

// One step of the state recursion (scalar state). S3 requires the freshly
// drawn next gap; the other models reject it.
double gen_state(StateModel model, double s, double x, int a, std::optional<double> x_next,
                 double noise_sd, Rng& rng);

// One gap-time draw by inversion of the proportional-intensity law with a
// constant baseline. X3 requires the freshly drawn next state; the other
// models reject it.
double sample_gap(GapModel model, double s, double x, int a, std::optional<double> s_next,
                  double baseline_rate, Rng& rng);

// Log of the covariate factor exp(beta' covariates) of the scenario's true
// intensity for the transition producing gap x_next.
double true_log_risk(const ScenarioSpec& spec, double s, double x, int a, double s_next);

// True intensity lambda(x_next; s_next, s, x, a) under the scenario.
inline double true_intensity(const ScenarioSpec& spec, double s, double x, int a, double s_next) {
  return spec.baseline_rate * std::exp(true_log_risk(spec, s, x, a, s_next));
}

// n trajectories of exactly K transitions each; behavior actions drawn from
// `behavior` at every observation (including the final one, whose action is
// stored but unused downstream). Deterministic given (spec, n, K, seed).
Dataset gen_dataset(const ScenarioSpec& spec, int n, int K, const PolicySpec& behavior,
                    uint64_t seed);

// Monte Carlo ground truth for the target policy under reference G: mean of
// the discounted reward sum over N independent rollouts, truncated once
// gamma^T drops below tail_tol. Integrated mode divides each reward by the
// scenario's true intensity at the realized transition.
TruthEstimate monte_carlo_truth(const ScenarioSpec& spec, const PolicySpec& policy,
                                const ReferenceDistribution& g, double gamma, long N,
                                double tail_tol, uint64_t seed, RewardMode mode);

}  // namespace ope
