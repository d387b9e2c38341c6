#include "ope/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ope {

double transform_state(double s) { return 0.5 * std::erfc(-s * 0.7071067811865475244); }

double transform_gap(double x) { return -std::expm1(-x); }

FeatureMap FeatureMap::fit(const BasisSpec& spec, const Dataset& data) {
  if (data.trajectories.empty()) throw std::invalid_argument("feature map: empty dataset");
  const int d = data.d;
  std::vector<std::vector<double>> s_samples(d);
  std::vector<double> x_sample;
  for (const auto& traj : data.trajectories) {
    for (int k = 0; k < traj.num_obs(); ++k) {
      const double* s = traj.state(k);
      for (int j = 0; j < d; ++j) s_samples[j].push_back(transform_state(s[j]));
      x_sample.push_back(transform_gap(traj.gap_times[k]));
    }
  }
  std::vector<BsplineBasis> margins(d);
  for (int j = 0; j < d; ++j)
    margins[j] = BsplineBasis::from_quantiles(spec.degree, spec.q_state, std::move(s_samples[j]));
  BsplineBasis gap = BsplineBasis::from_quantiles(spec.degree, spec.q_gap, std::move(x_sample));
  return from_margins(std::move(margins), std::move(gap), data.m);
}

FeatureMap FeatureMap::from_margins(std::vector<BsplineBasis> state_margins, BsplineBasis gap_margin,
                                    int m) {
  if (state_margins.empty()) throw std::invalid_argument("feature map: need >= 1 state margin");
  if (m < 1) throw std::invalid_argument("feature map: need m >= 1");
  FeatureMap fm;
  fm.state_margins_ = std::move(state_margins);
  fm.gap_margin_ = std::move(gap_margin);
  fm.m_ = m;
  int L = fm.gap_margin_.size();
  for (const auto& b : fm.state_margins_) L *= b.size();
  fm.tensor_size_ = L;
  return fm;
}

namespace {
// In-place tensor expansion: out[0..cur) becomes out[0..cur*nb) with
// out[i*nb + t] = prev[i] * basis_t(u). Processing i downward keeps unread
// sources intact.
void expand_margin(const BsplineBasis& basis, double u, double* out, int& cur) {
  double margin_vals[8];
  const int nb = basis.size();
  const int deg = basis.degree();
  const int first = basis.eval_nonzero(u, margin_vals);
  for (int i = cur - 1; i >= 0; --i) {
    const double v = out[i];
    double* dst = out + static_cast<size_t>(i) * nb;
    std::memset(dst, 0, sizeof(double) * nb);
    for (int t = deg; t >= 0; --t) dst[first + t] = v * margin_vals[t];
  }
  cur *= nb;
}
}  // namespace

void FeatureMap::state_tensor(const double* s, double* out) const {
  int cur = 1;
  out[0] = 1.0;
  for (size_t j = 0; j < state_margins_.size(); ++j)
    expand_margin(state_margins_[j], transform_state(s[j]), out, cur);
}

void FeatureMap::tensor(const double* s, double x, double* out) const {
  int cur = 1;
  out[0] = 1.0;
  for (size_t j = 0; j < state_margins_.size(); ++j)
    expand_margin(state_margins_[j], transform_state(s[j]), out, cur);
  expand_margin(gap_margin_, transform_gap(x), out, cur);
}

void FeatureMap::features(const double* s, double x, int a, double* out) const {
  if (a < 0 || a >= m_) throw std::domain_error("features: action out of range");
  std::fill(out, out + length(), 0.0);
  tensor(s, x, out + static_cast<size_t>(a) * tensor_size_);
}

Eigen::VectorXd FeatureMap::features(const double* s, double x, int a) const {
  Eigen::VectorXd out(length());
  features(s, x, a, out.data());
  return out;
}

void FeatureMap::policy_features(const PolicySpec& policy, const double* s, double x,
                                 double* out) const {
  double probs[16];
  std::vector<double> big;
  double* p = probs;
  if (m_ > 16) {
    big.resize(m_);
    p = big.data();
  }
  policy.action_probs(s, d(), x, p);
  std::vector<double> phi(tensor_size_);
  tensor(s, x, phi.data());
  for (int a = 0; a < m_; ++a) {
    double* dst = out + static_cast<size_t>(a) * tensor_size_;
    for (int i = 0; i < tensor_size_; ++i) dst[i] = p[a] * phi[i];
  }
}

Eigen::VectorXd FeatureMap::policy_features(const PolicySpec& policy, const double* s,
                                            double x) const {
  Eigen::VectorXd out(length());
  policy_features(policy, s, x, out.data());
  return out;
}

namespace {
// Panel nodes for [lo, hi], optionally split at an interior breakpoint so a
// piecewise-smooth integrand converges at the quadrature rate.
void panel_nodes(double lo, double hi, double breakpoint, bool split, int n,
                 const std::vector<double>& t, const std::vector<double>& w,
                 std::vector<std::pair<double, double>>& out) {
  out.clear();
  std::vector<std::pair<double, double>> panels;
  if (split && breakpoint > lo && breakpoint < hi) {
    panels = {{lo, breakpoint}, {breakpoint, hi}};
  } else {
    panels = {{lo, hi}};
  }
  for (const auto& [a, b] : panels)
    for (int i = 0; i < n; ++i)
      out.emplace_back(a + 0.5 * (t[i] + 1.0) * (b - a), 0.5 * w[i] * (b - a));
}
}  // namespace

Eigen::VectorXd FeatureMap::reference_features(const PolicySpec& policy,
                                               const ReferenceDistribution& g, int nodes) const {
  if (g.kind == ReferenceDistribution::Kind::PointMass)
    return policy_features(policy, g.atom_s.data(), g.atom_x);
  const int dims = g.d();
  if (dims != d()) throw std::invalid_argument("reference_features: dimension mismatch");

  std::vector<double> t, w;
  gauss_legendre(nodes, t, w);

  // A linear deterministic policy switches actions across a hyperplane;
  // splitting the panels at the switch keeps each piece smooth. d = 1 covers
  // both split directions, higher dimensions only the gap-time split.
  const bool linear = policy.kind == PolicySpec::Kind::LinearDeterministic;
  const bool split_s = linear && dims == 1 && policy.alpha2 == 0.0 && policy.alpha1[0] != 0.0;
  const bool split_x = linear && policy.alpha2 != 0.0;

  std::vector<std::pair<double, double>> s_nodes, x_nodes;
  double area = g.x_hi - g.x_lo;
  for (int j = 0; j < dims; ++j) area *= g.s_hi[j] - g.s_lo[j];

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(length());
  Eigen::VectorXd buf(length());
  std::vector<double> s(dims);
  std::vector<int> idx(dims, 0);

  const double s_break = split_s ? -policy.alpha0 / policy.alpha1[0] : 0.0;
  std::vector<std::vector<std::pair<double, double>>> s_axis(dims);
  for (int j = 0; j < dims; ++j)
    panel_nodes(g.s_lo[j], g.s_hi[j], s_break, split_s && j == 0, nodes, t, w, s_axis[j]);

  while (true) {
    double wprod = 1.0;
    for (int j = 0; j < dims; ++j) {
      s[j] = s_axis[j][idx[j]].first;
      wprod *= s_axis[j][idx[j]].second;
    }
    double x_break = 0.0;
    if (split_x) x_break = -policy.linear_score(s.data(), dims, 0.0) / policy.alpha2;
    panel_nodes(g.x_lo, g.x_hi, x_break, split_x, nodes, t, w, x_nodes);
    for (const auto& [x, wx] : x_nodes) {
      policy_features(policy, s.data(), x, buf.data());
      acc += (wprod * wx) * buf;
    }
    int j = 0;
    while (j < dims && ++idx[j] == static_cast<int>(s_axis[j].size())) idx[j++] = 0;
    if (j == dims) break;
  }
  return acc / area;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

}  // namespace ope
