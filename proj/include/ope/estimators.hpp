#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ope/feature_map.hpp"
#include "ope/renewal.hpp"
#include "ope/simulate.hpp"
#include "ope/trajectory.hpp"

namespace ope {

enum class Method { Naive, Standard, Modulated };

// Per-transition matrices are stored row-major: one contiguous row per
// transition.
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Naive: return "naive";
    case Method::Standard: return "standard";
    case Method::Modulated: return "modulated";
  }
  return "?";
}

// Per-transition feature cache shared by every estimator: tensor basis at the
// current and next observation, target-policy masses at the next observation,
// and the pieces needed to re-evaluate features at arbitrary gap times (the
// state-margin tensor at the next state). Transition order follows the
// dataset (trajectory major, step minor), matching RenewalFit.
struct TransitionTable {
  long n_K = 0;
  int L = 0;   // tensor size
  int F = 0;   // m * L
  int m = 0;
  int d = 0;
  int Ls = 0;  // state-margin tensor size (L = Ls * nx)
  int nx = 0;  // gap margin size

  std::vector<double> phi_cur;   // n_K x L
  std::vector<int> action;       // n_K
  std::vector<double> phi_next;  // n_K x L
  std::vector<double> pi_next;   // n_K x m
  std::vector<double> bs_next;   // n_K x Ls
  std::vector<double> s_next;    // n_K x d
  std::vector<double> gap_next;  // X_{i,k+1}
  std::vector<double> reward;    // R(T_{i,k+1})

  const double* phi(long t) const { return phi_cur.data() + t * L; }
  const double* phin(long t) const { return phi_next.data() + t * L; }
  const double* pin(long t) const { return pi_next.data() + t * m; }
  const double* bsn(long t) const { return bs_next.data() + t * Ls; }
};

TransitionTable build_transition_table(const Dataset& data, const FeatureMap& map,
                                       const PolicySpec& policy);

// Fitted linear Q-model plus what the sandwich needs from the fit.
struct QFit {
  Eigen::VectorXd theta;
  Eigen::MatrixXd design;  // the (1/n_K)-scaled design matrix that was solved
  double design_cond = 0.0;
  Method method = Method::Standard;
  RewardMode mode = RewardMode::Cumulative;
  RowMajorMatrix next_integral;  // modulated only: n_K x F rows of the
                                  // discounted next-feature integrals
};

// Discount powers and basis values on the Breslow jump grid; built once per
// (renewal fit, feature map, gamma) and shared by the modulated machinery.
struct JumpGrid {
  const RenewalFit* fit = nullptr;
  int nx = 0;
  std::vector<double> gamma_pow;  // gamma^{u_r}
  std::vector<double> bx;         // J x nx gap-margin basis at u_r
};

JumpGrid build_jump_grid(const RenewalFit& fit, const FeatureMap& map, double gamma);

// Least-squares temporal-difference solve with the exponential discount
// gamma^{X_{k+1}} on both the reward and the next-feature term.
QFit fit_q_standard(const TransitionTable& tt, double gamma, const std::vector<double>& rewards,
                    RewardMode mode);

// Same structure with the constant discount gamma in place of gamma^X.
QFit fit_q_naive(const TransitionTable& tt, double gamma, const std::vector<double>& rewards,
                 RewardMode mode);

// Discounted next-feature integrals against the fitted gap-time law, one row
// per transition; the modulated estimator replaces gamma^X * (next features)
// with these rows.
RowMajorMatrix compute_next_integral(const TransitionTable& tt, const RenewalFit& fit,
                                     const JumpGrid& grid, const PolicySpec& policy);

QFit fit_q_modulated(const TransitionTable& tt, double gamma, const std::vector<double>& rewards,
                     const RowMajorMatrix& next_integral, RewardMode mode);

// Inverse-intensity-weighted rewards. Fitted intensities evaluate the kernel
// baseline at min(gap, tau) and are floored at `floor` before dividing;
// floored divisions are counted, never fatal.
struct WeightedRewards {
  std::vector<double> values;      // R / intensity
  std::vector<double> intensity;   // the (floored) intensity used
  std::vector<double> baseline;    // kernel baseline at min(gap, tau)
  long floored = 0;
};

WeightedRewards inverse_intensity_weights(const TransitionTable& tt, const RenewalFit& fit,
                                          double floor = 1e-6);

// Oracle-side weights from the scenario's true intensity (truth checks only).
WeightedRewards inverse_intensity_weights_true(const Dataset& data, const ScenarioSpec& spec,
                                               double floor = 1e-6);

// zeta' theta for a point target or a reference distribution.
double value_at(const QFit& fit, const FeatureMap& map, const PolicySpec& policy, const double* s,
                double x);
double value_at(const QFit& fit, const FeatureMap& map, const PolicySpec& policy,
                const ReferenceDistribution& g);

}  // namespace ope
