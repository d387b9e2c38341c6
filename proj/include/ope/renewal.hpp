#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ope/trajectory.hpp"

namespace ope {

// Builds the covariate vector of the observation-process model from one
// transition. Scheme 1 conditions on the freshly drawn next state; scheme 2
// drops it. The identity maps are (S', S, X, A, S*A) and (S, X, A, S*A),
// entry-wise over state dimensions; the bounded variants pass the current
// gap through 1 - exp(-x), which keeps the fitted risk scores (and every
// plug-in variance term built from them) away from exponential-tail blowups.
struct CovariateBuilder {
  int dim = 0;
  std::function<void(const double* s_next, const double* s, double x, int a, double* out)> fill;

  static CovariateBuilder scheme1(int d);
  static CovariateBuilder scheme2(int d);
  static CovariateBuilder scheme1_bounded(int d);
  static CovariateBuilder scheme2_bounded(int d);
};

struct RenewalOptions {
  double tau = 0.0;            // > 0 overrides the quantile rule
  double tau_quantile = 0.95;
  int min_tail_risk = 5;       // keep at least this many gaps beyond tau
  double newton_tol = 1e-10;
  int max_iter = 100;
  int max_halvings = 30;
  double bandwidth = 0.0;      // > 0 overrides the n_K^(-1/3) rule
  double bandwidth_scale = 1.0;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& msg, Eigen::VectorXd iterate)
      : std::runtime_error(msg), last_iterate(std::move(iterate)) {}
  Eigen::VectorXd last_iterate;
};

struct ConditioningError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fitted proportional-intensity renewal model: coefficient vector, Breslow
// step baseline, risk-set summaries at every jump, and the information
// matrix. Immutable after fitting; evaluation is parallel-safe.
class RenewalFit {
 public:
  long n_transitions() const { return static_cast<long>(gaps_.size()); }
  int q() const { return static_cast<int>(beta_.size()); }
  const Eigen::VectorXd& beta() const { return beta_; }
  double tau() const { return tau_; }
  double bandwidth() const { return bandwidth_; }
  int newton_iterations() const { return newton_iterations_; }
  double score_norm() const { return score_norm_; }

  const std::vector<double>& gaps() const { return gaps_; }
  const Eigen::MatrixXd& covariates() const { return Z_; }
  const std::vector<double>& risk_scores() const { return risk_; }

  int jump_count() const { return static_cast<int>(jump_x_.size()); }
  int tau_jump_count() const { return tau_index_; }  // jumps at or below tau
  const std::vector<double>& jump_times() const { return jump_x_; }
  const std::vector<double>& jump_increments() const { return jump_dL_; }
  const std::vector<double>& jump_cumulative() const { return jump_L_; }
  const std::vector<double>& jump_s0() const { return jump_s0_; }   // (1/n_K) risk sums
  const std::vector<int>& jump_ties() const { return jump_ties_; }
  const Eigen::MatrixXd& jump_zbar() const { return jump_zbar_; }   // J x q
  const Eigen::MatrixXd& jump_zbar_dL_prefix() const { return jump_zbar_prefix_; }

  // Index of this transition's own jump (-1 if its gap exceeds tau), and of
  // the last jump <= min(gap, tau) (-1 if none).
  const std::vector<int>& event_index() const { return event_index_; }
  const std::vector<int>& last_jump_index() const { return le_index_; }

  double Lambda0(double x) const;
  double risk_score(const Eigen::VectorXd& z) const { return std::exp(beta_.dot(z)); }

  // P(X <= x | z); the baseline is flat beyond the largest observed gap.
  double Px(double x, const Eigen::VectorXd& z) const { return Px_risk(x, risk_score(z)); }
  double Px_risk(double x, double risk) const;

  // Exact Stieltjes sum of g over the jump set of Px(.; risk).
  double stieltjes_expectation(double risk, const std::function<double(double)>& g) const;

  // Kernel-smoothed baseline intensity on [0, tau], Epanechnikov with
  // reflection at both ends; evaluation beyond tau mirrors back inside.
  double kernel_lambda0(double x) const;

  // Martingale residual of transition t at x (x restricted to [0, tau]).
  double mart_residual(long t, double x) const;
  double mart_residual_at_tau(long t) const;

  // Score-type residual of transition t: the covariate-centered integral
  // against the transition's martingale residual over [0, tau].
  Eigen::VectorXd score_residual(long t) const;

  const Eigen::MatrixXd& information() const { return omega_; }  // q x q
  Eigen::MatrixXd information_inverse() const;
  Eigen::VectorXd beta_standard_errors() const;

 private:
  friend RenewalFit fit_renewal_raw(std::vector<double> gaps, Eigen::MatrixXd Z,
                                    const RenewalOptions& opts);

  std::vector<double> gaps_;
  Eigen::MatrixXd Z_;
  Eigen::VectorXd beta_;
  std::vector<double> risk_;
  double tau_ = 0.0;
  double bandwidth_ = 0.0;
  int newton_iterations_ = 0;
  double score_norm_ = 0.0;

  std::vector<double> jump_x_, jump_dL_, jump_L_, jump_s0_;
  std::vector<int> jump_ties_;
  Eigen::MatrixXd jump_zbar_, jump_zbar_prefix_;
  std::vector<int> event_index_, le_index_;
  Eigen::MatrixXd omega_;
  int tau_index_ = 0;
};

// Breslow step baseline at a given coefficient vector: one jump per distinct
// gap value (tie counts aggregated) plus the risk-set averages. tau_index
// counts the jumps at or below tau; the information matrix accumulates over
// those events only, matching the truncated score equation.
struct BreslowTable {
  std::vector<double> x, dL, L, s0;
  std::vector<int> ties;
  Eigen::MatrixXd zbar, zbar_prefix;  // J x q
  Eigen::MatrixXd info;               // q x q
  int tau_index = 0;
};

BreslowTable breslow_baseline(const std::vector<double>& gaps, const Eigen::MatrixXd& Z,
                              const Eigen::VectorXd& beta, double tau);

// Fit from raw per-transition arrays (gap, covariate row).
RenewalFit fit_renewal_raw(std::vector<double> gaps, Eigen::MatrixXd Z,
                           const RenewalOptions& opts);

// Fit from a dataset: one (gap X_{i,k+1}, covariate Z_{i,k}) pair per
// transition, trajectories in order.
RenewalFit fit_renewal(const Dataset& data, const CovariateBuilder& builder,
                       const RenewalOptions& opts);

}  // namespace ope
