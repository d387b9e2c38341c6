#include "ope/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace ope {

TransitionTable build_transition_table(const Dataset& data, const FeatureMap& map,
                                       const PolicySpec& policy) {
  TransitionTable tt;
  tt.n_K = data.total_transitions();
  tt.L = map.tensor_size();
  tt.F = map.length();
  tt.m = map.m();
  tt.d = map.d();
  tt.Ls = map.state_tensor_size();
  tt.nx = map.gap_margin().size();
  tt.phi_cur.resize(tt.n_K * tt.L);
  tt.phi_next.resize(tt.n_K * tt.L);
  tt.pi_next.resize(tt.n_K * tt.m);
  tt.bs_next.resize(tt.n_K * tt.Ls);
  tt.s_next.resize(tt.n_K * tt.d);
  tt.action.resize(tt.n_K);
  tt.gap_next.resize(tt.n_K);
  tt.reward.resize(tt.n_K);

  long t = 0;
  for (const auto& traj : data.trajectories) {
    for (int k = 0; k < traj.num_transitions(); ++k, ++t) {
      map.tensor(traj.state(k), traj.gap_times[k], tt.phi_cur.data() + t * tt.L);
      map.tensor(traj.state(k + 1), traj.gap_times[k + 1], tt.phi_next.data() + t * tt.L);
      map.state_tensor(traj.state(k + 1), tt.bs_next.data() + t * tt.Ls);
      policy.action_probs(traj.state(k + 1), tt.d, traj.gap_times[k + 1],
                          tt.pi_next.data() + t * tt.m);
      for (int j = 0; j < tt.d; ++j) tt.s_next[t * tt.d + j] = traj.state(k + 1)[j];
      tt.action[t] = traj.actions[k];
      tt.gap_next[t] = traj.gap_times[k + 1];
      tt.reward[t] = traj.rewards[k];
    }
  }
  return tt;
}

namespace {

// Shared least-squares TD solve. `discount[t]` multiplies both the reward and
// the next-feature term of transition t.
QFit solve_td(const TransitionTable& tt, const std::vector<double>& discount,
              const std::vector<double>& rewards, Method method, RewardMode mode) {
  const int L = tt.L, F = tt.F, m = tt.m;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(F, F);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(F);

  for (long t = 0; t < tt.n_K; ++t) {
    const double* phi = tt.phi(t);
    const double* phin = tt.phin(t);
    const double* pin = tt.pin(t);
    const int row0 = tt.action[t] * L;
    const double g = discount[t];
    for (int i = 0; i < L; ++i) {
      const double v = phi[i];
      if (v == 0.0) continue;
      double* drow = D.data() + (row0 + i);  // column-major: advance by F per column
      // xi xi' block
      for (int j = 0; j < L; ++j) drow[static_cast<size_t>(row0 + j) * F] += v * phi[j];
      // -g * xi zeta' blocks
      for (int a = 0; a < m; ++a) {
        const double w = -g * pin[a] * v;
        if (w == 0.0) continue;
        double* dcol = D.data() + static_cast<size_t>(a) * L * F + (row0 + i);
        for (int j = 0; j < L; ++j) dcol[static_cast<size_t>(j) * F] += w * phin[j];
      }
      b[row0 + i] += g * rewards[t] * v;
    }
  }
  D /= static_cast<double>(tt.n_K);
  b /= static_cast<double>(tt.n_K);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0))
    throw ConditioningError("q fit: singular design matrix");
  const double cond = smax / smin;
  if (cond > 1e10)
    throw ConditioningError("q fit: design condition number " + std::to_string(cond) +
                            " exceeds 1e10; reduce the number of knots");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
  Eigen::VectorXd theta = qr.solve(b);
  // one refinement step, then enforce the estimating-equation residual
  Eigen::VectorXd resid = b - D * theta;
  theta += qr.solve(resid);
  resid = b - D * theta;
  const double tol = 1e-8 * std::max(1.0, b.lpNorm<Eigen::Infinity>());
  if (resid.lpNorm<Eigen::Infinity>() > tol)
    throw std::runtime_error("q fit: estimating equation residual above tolerance");

  QFit fit;
  fit.theta = std::move(theta);
  fit.design = std::move(D);
  fit.design_cond = cond;
  fit.method = method;
  fit.mode = mode;
  return fit;
}

}  // namespace

QFit fit_q_standard(const TransitionTable& tt, double gamma, const std::vector<double>& rewards,
                    RewardMode mode) {
  std::vector<double> discount(tt.n_K);
  for (long t = 0; t < tt.n_K; ++t) discount[t] = std::pow(gamma, tt.gap_next[t]);
  return solve_td(tt, discount, rewards, Method::Standard, mode);
}

QFit fit_q_naive(const TransitionTable& tt, double gamma, const std::vector<double>& rewards,
                 RewardMode mode) {
  std::vector<double> discount(tt.n_K, gamma);
  return solve_td(tt, discount, rewards, Method::Naive, mode);
}

JumpGrid build_jump_grid(const RenewalFit& fit, const FeatureMap& map, double gamma) {
  JumpGrid grid;
  grid.fit = &fit;
  grid.nx = map.gap_margin().size();
  const auto& jumps = fit.jump_times();
  const int J = static_cast<int>(jumps.size());
  grid.gamma_pow.resize(J);
  grid.bx.resize(static_cast<size_t>(J) * grid.nx);
  const double lg = std::log(gamma);
  for (int r = 0; r < J; ++r) {
    grid.gamma_pow[r] = std::exp(lg * jumps[r]);
    map.gap_margin().eval(transform_gap(jumps[r]), grid.bx.data() + static_cast<size_t>(r) * grid.nx);
  }
  return grid;
}

namespace {

// Policy evaluated along the jump grid for one fixed next state. The linear
// family reduces to a gap-time threshold, which keeps the hot loop branchless.
struct PolicyOnGrid {
  int mode;  // 0 = constant probs, 1 = all action 1, 2 = all action 0,
             // 3 = action 1 iff u < thresh, 4 = action 1 iff u > thresh,
             // 5 = generic callback
  double thresh = 0.0;
  const double* probs = nullptr;
  const PolicySpec* policy = nullptr;
  const double* s = nullptr;
  int d = 1;

  static PolicyOnGrid make(const PolicySpec& policy, const double* s, int d) {
    PolicyOnGrid pg;
    pg.policy = &policy;
    pg.s = s;
    pg.d = d;
    if (policy.kind == PolicySpec::Kind::Stochastic) {
      pg.mode = 0;
      pg.probs = policy.probs.data();
    } else if (policy.kind == PolicySpec::Kind::LinearDeterministic) {
      double c0 = policy.alpha0;
      for (int j = 0; j < d; ++j) c0 += policy.alpha1[j] * s[j];
      if (policy.alpha2 == 0.0) {
        pg.mode = c0 <= 0.0 ? 2 : 1;
      } else if (policy.alpha2 > 0.0) {
        // score <= 0 iff u <= -c0/alpha2, which selects action 0
        pg.mode = 4;
        pg.thresh = -c0 / policy.alpha2;
      } else {
        pg.mode = 3;
        pg.thresh = -c0 / policy.alpha2;
      }
    } else {
      pg.mode = 5;
    }
    return pg;
  }

  void eval(double u, double* out, int m) const {
    switch (mode) {
      case 0:
        for (int a = 0; a < m; ++a) out[a] = probs[a];
        return;
      case 1:
        out[0] = 0.0;
        out[1] = 1.0;
        return;
      case 2:
        out[0] = 1.0;
        out[1] = 0.0;
        return;
      case 3:
        out[1] = u < thresh ? 1.0 : 0.0;
        out[0] = 1.0 - out[1];
        return;
      case 4:
        out[1] = u > thresh ? 1.0 : 0.0;
        out[0] = 1.0 - out[1];
        return;
      default:
        policy->action_probs(s, d, u, out);
    }
  }
};

constexpr double kSurvivalCutoff = 1e-18;

}  // namespace

RowMajorMatrix compute_next_integral(const TransitionTable& tt, const RenewalFit& fit,
                                     const JumpGrid& grid, const PolicySpec& policy) {
  if (fit.n_transitions() != tt.n_K)
    throw std::invalid_argument("next_integral: renewal fit and table disagree on transitions");
  const int J = fit.jump_count();
  const int nx = tt.nx, Ls = tt.Ls, L = tt.L, m = tt.m;
  const auto& jump_L = fit.jump_cumulative();
  const auto& jump_x = fit.jump_times();
  const auto& risk = fit.risk_scores();

  RowMajorMatrix out = RowMajorMatrix::Zero(tt.n_K, tt.F);
  std::vector<double> inner(static_cast<size_t>(m) * nx);
  std::vector<double> probs(m);

  for (long t = 0; t < tt.n_K; ++t) {
    std::fill(inner.begin(), inner.end(), 0.0);
    const PolicyOnGrid pg = PolicyOnGrid::make(policy, tt.s_next.data() + t * tt.d, tt.d);
    const double w = risk[t];
    double surv_prev = 1.0;
    for (int r = 0; r < J; ++r) {
      const double surv = std::exp(-jump_L[r] * w);
      const double mass = surv_prev - surv;
      surv_prev = surv;
      if (mass == 0.0) {
        if (surv < kSurvivalCutoff) break;
        continue;
      }
      const double c = grid.gamma_pow[r] * mass;
      const double* bx = grid.bx.data() + static_cast<size_t>(r) * nx;
      pg.eval(jump_x[r], probs.data(), m);
      for (int a = 0; a < m; ++a) {
        const double ca = c * probs[a];
        if (ca == 0.0) continue;
        double* dst = inner.data() + static_cast<size_t>(a) * nx;
        for (int j = 0; j < nx; ++j) dst[j] += ca * bx[j];
      }
      if (surv < kSurvivalCutoff) break;
    }
    // expand inner x state tensor into feature blocks
    const double* bs = tt.bsn(t);
    double* row = out.row(t).data();
    for (int a = 0; a < m; ++a) {
      const double* ia = inner.data() + static_cast<size_t>(a) * nx;
      for (int is = 0; is < Ls; ++is) {
        const double v = bs[is];
        double* dst = row + static_cast<size_t>(a) * L + static_cast<size_t>(is) * nx;
        for (int jx = 0; jx < nx; ++jx) dst[jx] = v * ia[jx];
      }
    }
  }
  return out;
}

QFit fit_q_modulated(const TransitionTable& tt, double gamma, const std::vector<double>& rewards,
                     const RowMajorMatrix& next_integral, RewardMode mode) {
  const int L = tt.L, F = tt.F;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(F, F);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(F);
  for (long t = 0; t < tt.n_K; ++t) {
    const double* phi = tt.phi(t);
    const int row0 = tt.action[t] * L;
    const double g = std::pow(gamma, tt.gap_next[t]);
    const double* u = next_integral.row(t).data();
    for (int i = 0; i < L; ++i) {
      const double v = phi[i];
      if (v == 0.0) continue;
      double* drow = D.data() + (row0 + i);
      for (int j = 0; j < L; ++j) drow[static_cast<size_t>(row0 + j) * F] += v * phi[j];
      for (int j = 0; j < F; ++j) drow[static_cast<size_t>(j) * F] -= v * u[j];
      b[row0 + i] += g * rewards[t] * v;
    }
  }
  D /= static_cast<double>(tt.n_K);
  b /= static_cast<double>(tt.n_K);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > 0.0)) throw ConditioningError("modulated q fit: singular design matrix");
  const double cond = svd.singularValues().maxCoeff() / smin;
  if (cond > 1e10)
    throw ConditioningError("modulated q fit: design condition number " + std::to_string(cond) +
                            " exceeds 1e10; reduce the number of knots");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
  Eigen::VectorXd theta = qr.solve(b);
  Eigen::VectorXd resid = b - D * theta;
  theta += qr.solve(resid);
  resid = b - D * theta;
  if (resid.lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, b.lpNorm<Eigen::Infinity>()))
    throw std::runtime_error("modulated q fit: estimating equation residual above tolerance");

  QFit fit;
  fit.theta = std::move(theta);
  fit.design = std::move(D);
  fit.design_cond = cond;
  fit.method = Method::Modulated;
  fit.mode = mode;
  fit.next_integral = next_integral;
  return fit;
}

WeightedRewards inverse_intensity_weights(const TransitionTable& tt, const RenewalFit& fit,
                                          double floor) {
  if (fit.n_transitions() != tt.n_K)
    throw std::invalid_argument("weights: renewal fit and table disagree on transitions");
  WeightedRewards out;
  out.values.resize(tt.n_K);
  out.intensity.resize(tt.n_K);
  out.baseline.resize(tt.n_K);
  const auto& risk = fit.risk_scores();
  for (long t = 0; t < tt.n_K; ++t) {
    const double base = fit.kernel_lambda0(std::min(tt.gap_next[t], fit.tau()));
    double lam = base * risk[t];
    if (lam < floor) {
      lam = floor;
      ++out.floored;
    }
    out.baseline[t] = base;
    out.intensity[t] = lam;
    out.values[t] = tt.reward[t] / lam;
  }
  return out;
}

WeightedRewards inverse_intensity_weights_true(const Dataset& data, const ScenarioSpec& spec,
                                               double floor) {
  WeightedRewards out;
  const long n = data.total_transitions();
  out.values.resize(n);
  out.intensity.resize(n);
  out.baseline.resize(n);
  long t = 0;
  for (const auto& traj : data.trajectories) {
    for (int k = 0; k < traj.num_transitions(); ++k, ++t) {
      double lam = true_intensity(spec, traj.state(k)[0], traj.gap_times[k], traj.actions[k],
                                  traj.state(k + 1)[0]);
      if (lam < floor) {
        lam = floor;
        ++out.floored;
      }
      out.baseline[t] = spec.baseline_rate;
      out.intensity[t] = lam;
      out.values[t] = traj.rewards[k] / lam;
    }
  }
  return out;
}

double value_at(const QFit& fit, const FeatureMap& map, const PolicySpec& policy, const double* s,
                double x) {
  return map.policy_features(policy, s, x).dot(fit.theta);
}

double value_at(const QFit& fit, const FeatureMap& map, const PolicySpec& policy,
                const ReferenceDistribution& g) {
  return map.reference_features(policy, g).dot(fit.theta);
}

}  // namespace ope
