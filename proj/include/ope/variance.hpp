#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <vector>

#include "ope/estimators.hpp"

namespace ope {

struct ValueEstimate {
  double value = 0.0;
  double se = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double ci_level = 0.95;
  long n_K = 0;
  Method method = Method::Standard;
  RewardMode mode = RewardMode::Cumulative;
  bool has_se = false;
};

// Per-transition influence contributions and the two sandwich factors. The
// estimator's variance is zeta' D^-1 Omega D^-T zeta / n_K with
// Omega = (1/n_K) sum psi psi'.
struct InfluenceBundle {
  Eigen::MatrixXd design;  // F x F
  Eigen::MatrixXd omega;   // F x F
  RowMajorMatrix psi;      // n_K x F
  std::vector<double> resid;
};

// psi = features * fitted TD residual; covers the standard estimator (either
// reward mode uses its own reward vector and theta).
InfluenceBundle influence_standard(const TransitionTable& tt, double gamma,
                                   const std::vector<double>& rewards, const QFit& fit);

// Correction rows accounting for the estimated gap-time law inside the
// modulated estimator, one matrix per supplied coefficient vector (sharing
// one sweep over the jump grid). Each row combines a curve integrated
// against the transition's martingale residual with a coupling through the
// renewal score residual.
std::vector<RowMajorMatrix> modulated_corrections(const TransitionTable& tt,
                                                  const RenewalFit& fit, const JumpGrid& grid,
                                                  const PolicySpec& policy,
                                                  const std::vector<Eigen::VectorXd>& thetas);

// Correction rows accounting for the estimated intensity inside the
// inverse-intensity weights (shared by both integrated estimators).
RowMajorMatrix integrated_correction(const TransitionTable& tt, const RenewalFit& fit,
                                     const WeightedRewards& weights, double gamma);

// Assembles psi = features * resid + corrections and the sandwich factors.
InfluenceBundle influence_with_corrections(const TransitionTable& tt, double gamma,
                                           const std::vector<double>& rewards, const QFit& fit,
                                           const std::vector<const RowMajorMatrix*>& corrections);

// zeta' D^-1 Omega D^-T zeta / n_K, packaged with a normal-theory interval.
ValueEstimate sandwich_estimate(const InfluenceBundle& bundle, const Eigen::VectorXd& zeta,
                                double theta_value, long n_K, Method method, RewardMode mode,
                                double ci_level = 0.95);

// ---- whole-dataset evaluation -------------------------------------------

struct MethodRequest {
  Method method;
  RewardMode mode;
};

struct EvalOptions {
  BasisSpec basis;
  RenewalOptions renewal;
  int scheme = 1;                  // covariate builder scheme for the renewal fit
  bool bounded_gap_covariate = true;  // pass the gap covariate through 1 - exp(-x)
  double weight_floor = 1e-6;
  int quadrature_nodes = 64;
  double ci_level = 0.95;
};

struct EvalResult {
  Method method;
  RewardMode mode;
  ValueEstimate estimate;
  double design_cond = 0.0;
};

struct DatasetEvaluation {
  std::vector<EvalResult> results;
  long n_K = 0;
  int newton_iterations = 0;
  long floored_weights = 0;
  double renewal_score_norm = 0.0;
};

// Runs every requested (method, reward mode) pair on one dataset, sharing the
// feature map, the renewal fit, the weights, and the jump-grid sweeps.
DatasetEvaluation evaluate_dataset(const Dataset& data, const PolicySpec& policy, double gamma,
                                   const std::map<RewardMode, ReferenceDistribution>& references,
                                   const std::vector<MethodRequest>& requests,
                                   const EvalOptions& opts);

}  // namespace ope
