#include "ope/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ope {

BsplineBasis::BsplineBasis(int degree, const std::vector<double>& interior) : degree_(degree) {
  if (degree < 1) throw std::invalid_argument("bspline: degree must be >= 1");
  for (size_t j = 0; j < interior.size(); ++j) {
    if (!(interior[j] >= 0.0 && interior[j] <= 1.0))
      throw std::invalid_argument("bspline: interior knot outside [0,1]");
    if (j > 0 && interior[j] < interior[j - 1])
      throw std::invalid_argument("bspline: interior knots not nondecreasing");
  }
  knots_.assign(degree + 1, 0.0);
  knots_.insert(knots_.end(), interior.begin(), interior.end());
  knots_.insert(knots_.end(), degree + 1, 1.0);
}

double sample_quantile(const std::vector<double>& sorted, double p) {
  const size_t n = sorted.size();
  if (n == 0) throw std::invalid_argument("sample_quantile: empty sample");
  if (n == 1) return sorted[0];
  const double h = p * (n - 1);
  const size_t lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted[n - 1];
  const double w = h - lo;
  return sorted[lo] + w * (sorted[lo + 1] - sorted[lo]);
}

BsplineBasis BsplineBasis::from_quantiles(int degree, int q_interior, std::vector<double> sample) {
  if (q_interior < 0) throw std::invalid_argument("bspline: negative interior knot count");
  std::sort(sample.begin(), sample.end());
  std::vector<double> interior(q_interior);
  for (int j = 1; j <= q_interior; ++j)
    interior[j - 1] = sample_quantile(sample, static_cast<double>(j) / (q_interior + 1));
  return BsplineBasis(degree, interior);
}

int BsplineBasis::find_span(double u) const {
  const int n = size() - 1;  // last basis index
  if (u >= 1.0) return n;    // right-closed: u == 1 lands in the final span
  int lo = degree_, hi = n + 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (u < knots_[mid])
      hi = mid;
    else
      lo = mid;
  }
  return lo;
}

int BsplineBasis::eval_nonzero(double u, double* out) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("bspline: evaluation point outside [0,1]");
  const int span = find_span(u);
  double left[8], right[8];
  out[0] = 1.0;
  for (int j = 1; j <= degree_; ++j) {
    left[j] = u - knots_[span + 1 - j];
    right[j] = knots_[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
  return span - degree_;
}

void BsplineBasis::eval(double u, double* out) const {
  std::fill(out, out + size(), 0.0);
  double vals[8];
  const int first = eval_nonzero(u, vals);
  for (int j = 0; j <= degree_; ++j) out[first + j] = vals[j];
}

std::vector<double> BsplineBasis::eval(double u) const {
  std::vector<double> out(size());
  eval(u, out.data());
  return out;
}

}  // namespace ope
