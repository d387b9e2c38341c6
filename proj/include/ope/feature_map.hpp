#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ope/bspline.hpp"
#include "ope/policy.hpp"
#include "ope/reference.hpp"
#include "ope/trajectory.hpp"

namespace ope {

// Maps state coordinates through the standard normal CDF and the gap time
// through 1 - exp(-x); both land in (0, 1) and are strictly monotone.
double transform_state(double s);
double transform_gap(double x);

struct BasisSpec {
  int degree = 3;
  int q_state = 2;  // interior knots per state margin
  int q_gap = 2;    // interior knots for the gap margin
};

// Tensor-product B-spline feature map over (state, gap), replicated per
// action as indicator blocks: the feature vector for action a holds the
// tensor basis in block a and zeros elsewhere. Knots are frozen at
// construction from the estimation dataset and reused everywhere downstream.
class FeatureMap {
 public:
  FeatureMap() = default;

  // Knots from equally spaced sample quantiles of the transformed
  // observations (all K_i + 1 per trajectory).
  static FeatureMap fit(const BasisSpec& spec, const Dataset& data);

  // Explicit margins (transformed scale), mainly for tests and reloads.
  static FeatureMap from_margins(std::vector<BsplineBasis> state_margins, BsplineBasis gap_margin,
                                 int m);

  int d() const { return static_cast<int>(state_margins_.size()); }
  int m() const { return m_; }
  int tensor_size() const { return tensor_size_; }       // L
  int length() const { return m_ * tensor_size_; }       // m * L
  const BsplineBasis& state_margin(int j) const { return state_margins_[j]; }
  const BsplineBasis& gap_margin() const { return gap_margin_; }

  // Tensor basis at the transformed point; out has tensor_size() entries.
  // The gap margin varies fastest, so tensor = state_tensor (x) gap basis.
  void tensor(const double* s, double x, double* out) const;

  // Tensor over the state margins only; out has state_tensor_size() entries.
  int state_tensor_size() const { return tensor_size_ / gap_margin_.size(); }
  void state_tensor(const double* s, double* out) const;

  // Feature vector for one action: block a holds the tensor basis.
  void features(const double* s, double x, int a, double* out) const;
  Eigen::VectorXd features(const double* s, double x, int a) const;

  // Policy-averaged features: sum_a pi(a|s,x) * features(s, x, a).
  void policy_features(const PolicySpec& policy, const double* s, double x, double* out) const;
  Eigen::VectorXd policy_features(const PolicySpec& policy, const double* s, double x) const;

  // Reference-averaged features: the integral of policy_features under G.
  // Uniform boxes use tensor Gauss-Legendre quadrature with `nodes` points
  // per margin; a point mass collapses to policy_features at the atom.
  Eigen::VectorXd reference_features(const PolicySpec& policy, const ReferenceDistribution& g,
                                     int nodes = 64) const;

 private:
  std::vector<BsplineBasis> state_margins_;
  BsplineBasis gap_margin_;
  int m_ = 2;
  int tensor_size_ = 0;
};

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace ope
