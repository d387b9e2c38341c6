#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace ope {

// Target/behavior policy: probability mass over m actions given (state, gap).
// The linear-deterministic family scores a0 + a1's + a2*x; the indicator
// branch (score <= 0, ties inclusive) selects action 0 and the complement
// selects action 1. This is the convention that reproduces the benchmark
// ground-truth values.
struct PolicySpec {
  enum class Kind { LinearDeterministic, Stochastic, Callback };

  Kind kind = Kind::Stochastic;
  int m = 2;

  // linear-deterministic coefficients
  double alpha0 = 0.0;
  std::vector<double> alpha1;  // length d
  double alpha2 = 0.0;

  // stochastic: constant mass table over actions
  std::vector<double> probs;

  // callback: fills out[0..m-1]
  std::function<void(const double* s, int d, double x, double* out, int m)> callback;

  static PolicySpec linear_deterministic(double a0, std::vector<double> a1, double a2) {
    PolicySpec p;
    p.kind = Kind::LinearDeterministic;
    p.m = 2;
    p.alpha0 = a0;
    p.alpha1 = std::move(a1);
    p.alpha2 = a2;
    return p;
  }

  static PolicySpec stochastic(std::vector<double> mass) {
    PolicySpec p;
    p.kind = Kind::Stochastic;
    p.m = static_cast<int>(mass.size());
    p.probs = std::move(mass);
    return p;
  }

  static PolicySpec uniform(int m) {
    return stochastic(std::vector<double>(m, 1.0 / m));
  }

  double linear_score(const double* s, int d, double x) const {
    double v = alpha0 + alpha2 * x;
    for (int j = 0; j < d; ++j) v += alpha1[j] * s[j];
    return v;
  }

  // Fills out[0..m-1] with pi(.|s, x).
  void action_probs(const double* s, int d, double x, double* out) const {
    switch (kind) {
      case Kind::LinearDeterministic: {
        const int chosen = linear_score(s, d, x) <= 0.0 ? 0 : 1;
        out[0] = chosen == 0 ? 1.0 : 0.0;
        out[1] = chosen == 1 ? 1.0 : 0.0;
        break;
      }
      case Kind::Stochastic:
        for (int a = 0; a < m; ++a) out[a] = probs[a];
        break;
      case Kind::Callback:
        callback(s, d, x, out, m);
        break;
    }
  }
};

inline double policy_prob(const PolicySpec& policy, const double* s, int d, double x, int a) {
  if (a < 0 || a >= policy.m) throw std::domain_error("policy_prob: action out of range");
  double buf[16];
  std::vector<double> big;
  double* out = buf;
  if (policy.m > 16) {
    big.resize(policy.m);
    out = big.data();
  }
  policy.action_probs(s, d, x, out);
  return out[a];
}

inline double policy_prob(const PolicySpec& policy, double s, double x, int a) {
  return policy_prob(policy, &s, 1, x, a);
}

}  // namespace ope
