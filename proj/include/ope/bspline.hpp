#pragma once

#include <vector>

namespace ope {

// Clamped B-spline basis on [0, 1], evaluated by the Cox-de Boor recursion.
// With q interior knots and degree p the basis has q + p + 1 functions and
// forms a partition of unity on [0, 1].
class BsplineBasis {
 public:
  BsplineBasis() = default;

  // Interior knots given explicitly (ascending, in (0, 1)); boundary knots 0
  // and 1 get multiplicity degree + 1.
  BsplineBasis(int degree, const std::vector<double>& interior);

  // Interior knots at the equally spaced quantile levels j/(q+1), j = 1..q,
  // of the provided sample (values in [0, 1]).
  static BsplineBasis from_quantiles(int degree, int q_interior, std::vector<double> sample);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
  const std::vector<double>& knots() const { return knots_; }

  // Writes the degree+1 possibly-nonzero values for u in [0, 1] and returns
  // the index of the first one. Values outside [0, 1] are a domain error.
  int eval_nonzero(double u, double* out) const;

  // Full-length basis vector (size() entries).
  void eval(double u, double* out) const;
  std::vector<double> eval(double u) const;

 private:
  int find_span(double u) const;

  int degree_ = 3;
  std::vector<double> knots_;
};

// Linear-interpolation sample quantile at level p (an order-statistic rule,
// so permutation invariant). `sorted` must be ascending and nonempty.
double sample_quantile(const std::vector<double>& sorted, double p);

}  // namespace ope
