#include "ope/variance.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ope {

namespace {
constexpr double kSurvivalCutoff = 1e-18;

double z_for_level(double level) {
  // two-sided normal quantile; 0.95 is the only level used in practice,
  // other levels fall back to bisection on the normal CDF
  if (std::abs(level - 0.95) < 1e-12) return 1.959963984540054;
  double lo = 0.0, hi = 10.0;
  const double target = 1.0 - (1.0 - level) / 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double p = 0.5 * std::erfc(-mid * 0.7071067811865475244);
    (p < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace

InfluenceBundle influence_standard(const TransitionTable& tt, double gamma,
                                   const std::vector<double>& rewards, const QFit& fit) {
  const int L = tt.L, F = tt.F, m = tt.m;
  InfluenceBundle out;
  out.design = fit.design;
  out.psi = RowMajorMatrix::Zero(tt.n_K, F);
  out.resid.resize(tt.n_K);
  const double* theta = fit.theta.data();
  for (long t = 0; t < tt.n_K; ++t) {
    const double g =
        fit.method == Method::Naive ? gamma : std::pow(gamma, tt.gap_next[t]);
    const double* phi = tt.phi(t);
    const double* phin = tt.phin(t);
    const double* pin = tt.pin(t);
    double q_cur = 0.0;
    const double* th_cur = theta + static_cast<size_t>(tt.action[t]) * L;
    for (int i = 0; i < L; ++i) q_cur += phi[i] * th_cur[i];
    double q_next = 0.0;
    for (int a = 0; a < m; ++a) {
      if (pin[a] == 0.0) continue;
      const double* th = theta + static_cast<size_t>(a) * L;
      double dot = 0.0;
      for (int i = 0; i < L; ++i) dot += phin[i] * th[i];
      q_next += pin[a] * dot;
    }
    const double resid = g * rewards[t] + g * q_next - q_cur;
    out.resid[t] = resid;
    double* row = out.psi.row(t).data();
    double* dst = row + static_cast<size_t>(tt.action[t]) * L;
    for (int i = 0; i < L; ++i) dst[i] = resid * phi[i];
  }
  out.omega = out.psi.transpose() * out.psi / static_cast<double>(tt.n_K);
  return out;
}

namespace {

// Policy threshold helper shared with estimators.cpp (local copy; the logic
// is small enough to keep private to each translation unit).
struct GridPolicy {
  int mode;
  double thresh = 0.0;
  const double* probs = nullptr;
  const PolicySpec* policy = nullptr;
  const double* s = nullptr;
  int d = 1;

  static GridPolicy make(const PolicySpec& policy, const double* s, int d) {
    GridPolicy pg;
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

}  // namespace

std::vector<RowMajorMatrix> modulated_corrections(const TransitionTable& tt,
                                                  const RenewalFit& fit, const JumpGrid& grid,
                                                  const PolicySpec& policy,
                                                  const std::vector<Eigen::VectorXd>& thetas) {
  // the correction integrals all live on [0, tau]
  const int J = fit.tau_jump_count();
  const int L = tt.L, F = tt.F, m = tt.m, nx = tt.nx, Ls = tt.Ls;
  const int q = fit.q();
  const long n_K = tt.n_K;
  const int T = static_cast<int>(thetas.size());
  const auto& jump_L = fit.jump_cumulative();
  const auto& jump_x = fit.jump_times();
  const auto& jump_dL = fit.jump_increments();
  const auto& jump_s0 = fit.jump_s0();
  const auto& zbar = fit.jump_zbar();
  const auto& zpre = fit.jump_zbar_dL_prefix();
  const auto& risk = fit.risk_scores();
  const Eigen::MatrixXd& Z = fit.covariates();

  // J x F row-major accumulators per theta
  std::vector<std::vector<double>> G1(T), G2(T);
  for (int s = 0; s < T; ++s) {
    G1[s].assign(static_cast<size_t>(J) * F, 0.0);
    G2[s].assign(static_cast<size_t>(J) * F, 0.0);
  }
  std::vector<Eigen::MatrixXd> G3(T), G4(T);
  for (int s = 0; s < T; ++s) {
    G3[s] = Eigen::MatrixXd::Zero(F, q);
    G4[s] = Eigen::MatrixXd::Zero(F, q);
  }

  std::vector<double> ga(static_cast<size_t>(T) * m * nx);  // theta folded with state tensor
  std::vector<double> probs(m);
  std::vector<double> w3(static_cast<size_t>(T) * q), w4(static_cast<size_t>(T) * q);

  for (long t = 0; t < n_K; ++t) {
    const double W = risk[t];
    const double* bs = tt.bsn(t);
    const double* phi = tt.phi(t);
    const int blk = tt.action[t] * L;

    // fold each theta block with the state tensor: ga[s,a,jx] = sum_is bs[is] theta[a,is,jx]
    for (int s = 0; s < T; ++s) {
      const double* th = thetas[s].data();
      for (int a = 0; a < m; ++a) {
        double* dst = ga.data() + (static_cast<size_t>(s) * m + a) * nx;
        std::memset(dst, 0, sizeof(double) * nx);
        const double* tha = th + static_cast<size_t>(a) * L;
        for (int is = 0; is < Ls; ++is) {
          const double v = bs[is];
          if (v == 0.0) continue;
          const double* src = tha + static_cast<size_t>(is) * nx;
          for (int jx = 0; jx < nx; ++jx) dst[jx] += v * src[jx];
        }
      }
    }
    std::fill(w3.begin(), w3.end(), 0.0);
    std::fill(w4.begin(), w4.end(), 0.0);

    const GridPolicy pg = GridPolicy::make(policy, tt.s_next.data() + t * tt.d, tt.d);
    double surv_prev = 1.0;
    for (int r = 0; r < J; ++r) {
      const double surv = std::exp(-jump_L[r] * W);
      const double mass = surv_prev - surv;
      surv_prev = surv;
      const double* bx = grid.bx.data() + static_cast<size_t>(r) * nx;
      pg.eval(jump_x[r], probs.data(), m);
      const double gr = grid.gamma_pow[r];
      for (int s = 0; s < T; ++s) {
        // policy-averaged Q at (next state, u_r) under theta_s
        double qv = 0.0;
        for (int a = 0; a < m; ++a) {
          if (probs[a] == 0.0) continue;
          const double* g = ga.data() + (static_cast<size_t>(s) * m + a) * nx;
          double dot = 0.0;
          for (int jx = 0; jx < nx; ++jx) dot += g[jx] * bx[jx];
          qv += probs[a] * dot;
        }
        if (qv == 0.0) continue;
        const double c1 = gr * qv * surv * W;
        if (c1 != 0.0) {
          double* row1 = G1[s].data() + static_cast<size_t>(r) * F + blk;
          double* row2 = G2[s].data() + static_cast<size_t>(r) * F + blk;
          const double c2 = c1 * W;
          for (int i = 0; i < L; ++i) {
            row1[i] += c1 * phi[i];
            row2[i] += c2 * phi[i];
          }
        }
        if (mass != 0.0) {
          const double c3 = gr * qv * mass;
          const double c4 = c3 * W;
          double* w3s = w3.data() + static_cast<size_t>(s) * q;
          double* w4s = w4.data() + static_cast<size_t>(s) * q;
          const double Lr = jump_L[r];
          for (int j = 0; j < q; ++j) {
            w3s[j] += c3 * (Z(t, j) - zbar(r, j));
            w4s[j] += c4 * (Z(t, j) * Lr - zpre(r, j));
          }
        }
      }
      if (surv < kSurvivalCutoff) break;
    }
    for (int s = 0; s < T; ++s) {
      for (int j = 0; j < q; ++j) {
        for (int i = 0; i < L; ++i) {
          G3[s](blk + i, j) += phi[i] * w3[static_cast<size_t>(s) * q + j];
          G4[s](blk + i, j) += phi[i] * w4[static_cast<size_t>(s) * q + j];
        }
      }
    }
  }

  // H_r = (G1_r/n - sum_{rho>r} (G2_rho/n) dL_rho) / s0_r, overwriting G1;
  // then the running integral P_r = sum_{rho<=r} H_rho dL_rho overwrites G2.
  const double inv_n = 1.0 / static_cast<double>(n_K);
  for (int s = 0; s < T; ++s) {
    std::vector<double> suffix(F, 0.0);
    for (int r = J - 1; r >= 0; --r) {
      double* h = G1[s].data() + static_cast<size_t>(r) * F;
      const double* g2 = G2[s].data() + static_cast<size_t>(r) * F;
      const double inv_s0 = 1.0 / jump_s0[r];
      for (int i = 0; i < F; ++i) {
        const double hv = (h[i] * inv_n - suffix[i]) * inv_s0;
        suffix[i] += g2[i] * inv_n * jump_dL[r];
        h[i] = hv;
      }
    }
    std::vector<double> prefix(F, 0.0);
    for (int r = 0; r < J; ++r) {
      const double* h = G1[s].data() + static_cast<size_t>(r) * F;
      double* p = G2[s].data() + static_cast<size_t>(r) * F;
      for (int i = 0; i < F; ++i) {
        prefix[i] += h[i] * jump_dL[r];
        p[i] = prefix[i];
      }
    }
  }

  std::vector<Eigen::MatrixXd> coupling(T);
  const Eigen::MatrixXd omega_inv = fit.information_inverse();
  for (int s = 0; s < T; ++s) coupling[s] = (G3[s] - G4[s]) * inv_n * omega_inv;

  std::vector<RowMajorMatrix> out(T);
  for (int s = 0; s < T; ++s) out[s] = RowMajorMatrix::Zero(n_K, F);
  const auto& ev = fit.event_index();
  const auto& le = fit.last_jump_index();
  for (long t = 0; t < n_K; ++t) {
    const Eigen::VectorXd sres = fit.score_residual(t);
    for (int s = 0; s < T; ++s) {
      double* row = out[s].row(t).data();
      if (ev[t] >= 0) {
        const double* h = G1[s].data() + static_cast<size_t>(ev[t]) * F;
        for (int i = 0; i < F; ++i) row[i] += h[i];
      }
      if (le[t] >= 0) {
        const double* p = G2[s].data() + static_cast<size_t>(le[t]) * F;
        const double W = risk[t];
        for (int i = 0; i < F; ++i) row[i] -= W * p[i];
      }
      Eigen::Map<Eigen::VectorXd>(row, F) += coupling[s] * sres;
    }
  }
  return out;
}

RowMajorMatrix integrated_correction(const TransitionTable& tt, const RenewalFit& fit,
                                     const WeightedRewards& weights, double gamma) {
  const int J = fit.tau_jump_count();
  const int L = tt.L, F = tt.F;
  const int q = fit.q();
  const long n_K = tt.n_K;
  const auto& jump_x = fit.jump_times();
  const auto& jump_dL = fit.jump_increments();
  const auto& jump_s0 = fit.jump_s0();
  const auto& zbar = fit.jump_zbar();
  const auto& risk = fit.risk_scores();
  const Eigen::MatrixXd& Z = fit.covariates();
  const double b = fit.bandwidth();

  std::vector<double> G5(static_cast<size_t>(J) * F, 0.0);  // J x F row-major
  Eigen::MatrixXd G6 = Eigen::MatrixXd::Zero(F, q);

  for (long t = 0; t < n_K; ++t) {
    const double gX = std::pow(gamma, tt.gap_next[t]);
    const double coef = gX * weights.values[t] / std::max(weights.baseline[t], 1e-6);
    const double* phi = tt.phi(t);
    const int blk = tt.action[t] * L;
    // kernel windows around the evaluation point of the weight's baseline,
    // with the same boundary reflection the smoother itself uses
    const double x = std::min(tt.gap_next[t], fit.tau());
    for (const double center : {x, -x, 2.0 * fit.tau() - x}) {
      auto lo = std::lower_bound(jump_x.begin(), jump_x.begin() + J, center - b);
      auto hi = std::upper_bound(jump_x.begin(), jump_x.begin() + J, center + b);
      for (auto it = lo; it != hi; ++it) {
        const size_t r = it - jump_x.begin();
        const double u = (*it - center) / b;
        const double kv = 0.75 * (1.0 - u * u) / b;
        double* row = G5.data() + r * F + blk;
        const double c = coef * kv;
        for (int i = 0; i < L; ++i) row[i] += c * phi[i];
      }
    }
    // covariate-centered reward coupling; the risk average freezes at tau
    const int zi = fit.event_index()[t] >= 0 ? fit.event_index()[t] : J - 1;
    const double c6 = gX * weights.values[t];
    for (int j = 0; j < q; ++j) {
      const double v = c6 * (Z(t, j) - zbar(zi, j));
      for (int i = 0; i < L; ++i) G6(blk + i, j) += phi[i] * v;
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n_K);
  // H5 and its running integral in place
  for (int r = 0; r < J; ++r) {
    double* h = G5.data() + static_cast<size_t>(r) * F;
    const double inv_s0 = inv_n / jump_s0[r];
    for (int i = 0; i < F; ++i) h[i] *= inv_s0;
  }
  std::vector<double> prefix(F, 0.0);
  std::vector<double> P5(static_cast<size_t>(J) * F);
  for (int r = 0; r < J; ++r) {
    const double* h = G5.data() + static_cast<size_t>(r) * F;
    double* p = P5.data() + static_cast<size_t>(r) * F;
    for (int i = 0; i < F; ++i) {
      prefix[i] += h[i] * jump_dL[r];
      p[i] = prefix[i];
    }
  }
  const Eigen::MatrixXd coupling = G6 * inv_n * fit.information_inverse();

  RowMajorMatrix out = RowMajorMatrix::Zero(n_K, F);
  const auto& ev = fit.event_index();
  const auto& le = fit.last_jump_index();
  for (long t = 0; t < n_K; ++t) {
    double* row = out.row(t).data();
    if (ev[t] >= 0) {
      const double* h = G5.data() + static_cast<size_t>(ev[t]) * F;
      for (int i = 0; i < F; ++i) row[i] += h[i];
    }
    if (le[t] >= 0) {
      const double* p = P5.data() + static_cast<size_t>(le[t]) * F;
      const double W = risk[t];
      for (int i = 0; i < F; ++i) row[i] -= W * p[i];
    }
    Eigen::Map<Eigen::VectorXd>(row, F) += coupling * fit.score_residual(t);
  }
  return out;
}

InfluenceBundle influence_with_corrections(const TransitionTable& tt, double gamma,
                                           const std::vector<double>& rewards, const QFit& fit,
                                           const std::vector<const RowMajorMatrix*>& corrections) {
  const int L = tt.L, F = tt.F, m = tt.m;
  InfluenceBundle out;
  out.design = fit.design;
  out.psi = RowMajorMatrix::Zero(tt.n_K, F);
  out.resid.resize(tt.n_K);
  const double* theta = fit.theta.data();
  const bool modulated = fit.method == Method::Modulated;
  for (long t = 0; t < tt.n_K; ++t) {
    const double g = std::pow(gamma, tt.gap_next[t]);
    const double* phi = tt.phi(t);
    double q_cur = 0.0;
    const double* th_cur = theta + static_cast<size_t>(tt.action[t]) * L;
    for (int i = 0; i < L; ++i) q_cur += phi[i] * th_cur[i];
    double q_next;
    if (modulated) {
      q_next = fit.next_integral.row(t).dot(fit.theta);
    } else {
      const double* phin = tt.phin(t);
      const double* pin = tt.pin(t);
      double acc = 0.0;
      for (int a = 0; a < m; ++a) {
        if (pin[a] == 0.0) continue;
        const double* th = theta + static_cast<size_t>(a) * L;
        double dot = 0.0;
        for (int i = 0; i < L; ++i) dot += phin[i] * th[i];
        acc += pin[a] * dot;
      }
      q_next = g * acc;
    }
    const double resid = g * rewards[t] + q_next - q_cur;
    out.resid[t] = resid;
    double* row = out.psi.row(t).data();
    double* dst = row + static_cast<size_t>(tt.action[t]) * L;
    for (int i = 0; i < L; ++i) dst[i] = resid * phi[i];
    for (const auto* corr : corrections)
      Eigen::Map<Eigen::VectorXd>(row, F) += corr->row(t).transpose();
  }
  out.omega = out.psi.transpose() * out.psi / static_cast<double>(tt.n_K);
  return out;
}

ValueEstimate sandwich_estimate(const InfluenceBundle& bundle, const Eigen::VectorXd& zeta,
                                double theta_value, long n_K, Method method, RewardMode mode,
                                double ci_level) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(bundle.design.transpose());
  const Eigen::VectorXd a = lu.solve(zeta);
  double var = a.dot(bundle.omega * a);
  if (var < 0.0) var = 0.0;
  ValueEstimate est;
  est.value = theta_value;
  est.se = std::sqrt(var / static_cast<double>(n_K));
  const double z = z_for_level(ci_level);
  est.ci_lo = est.value - z * est.se;
  est.ci_hi = est.value + z * est.se;
  est.ci_level = ci_level;
  est.n_K = n_K;
  est.method = method;
  est.mode = mode;
  est.has_se = true;
  return est;
}

DatasetEvaluation evaluate_dataset(const Dataset& data, const PolicySpec& policy, double gamma,
                                   const std::map<RewardMode, ReferenceDistribution>& references,
                                   const std::vector<MethodRequest>& requests,
                                   const EvalOptions& opts) {
  DatasetEvaluation out;
  const FeatureMap map = FeatureMap::fit(opts.basis, data);
  const TransitionTable tt = build_transition_table(data, map, policy);
  out.n_K = tt.n_K;

  bool needs_renewal = false, needs_integrated = false;
  bool wants_mod_cum = false, wants_mod_int = false;
  for (const auto& req : requests) {
    if (req.method == Method::Modulated) needs_renewal = true;
    if (req.mode == RewardMode::Integrated) {
      needs_renewal = true;
      needs_integrated = true;
    }
    if (req.method == Method::Modulated && req.mode == RewardMode::Cumulative)
      wants_mod_cum = true;
    if (req.method == Method::Modulated && req.mode == RewardMode::Integrated)
      wants_mod_int = true;
  }

  std::optional<RenewalFit> renewal;
  std::optional<JumpGrid> grid;
  Eigen::MatrixXd next_integral;
  WeightedRewards weights;
  if (needs_renewal) {
    const CovariateBuilder builder =
        opts.scheme == 2
            ? (opts.bounded_gap_covariate ? CovariateBuilder::scheme2_bounded(data.d)
                                          : CovariateBuilder::scheme2(data.d))
            : (opts.bounded_gap_covariate ? CovariateBuilder::scheme1_bounded(data.d)
                                          : CovariateBuilder::scheme1(data.d));
    renewal.emplace(fit_renewal(data, builder, opts.renewal));
    out.newton_iterations = renewal->newton_iterations();
    out.renewal_score_norm = renewal->score_norm();
    grid.emplace(build_jump_grid(*renewal, map, gamma));
    if (wants_mod_cum || wants_mod_int)
      next_integral = compute_next_integral(tt, *renewal, *grid, policy);
    if (needs_integrated) {
      weights = inverse_intensity_weights(tt, *renewal, opts.weight_floor);
      out.floored_weights = weights.floored;
    }
  }

  // zeta per reward mode
  std::map<RewardMode, Eigen::VectorXd> zetas;
  for (const auto& [mode, g] : references)
    zetas.emplace(mode, map.reference_features(policy, g, opts.quadrature_nodes));

  // fits, shared across requests
  std::map<std::pair<int, int>, QFit> fits;
  auto fit_for = [&](Method method, RewardMode mode) -> QFit& {
    const auto key = std::make_pair(static_cast<int>(method), static_cast<int>(mode));
    auto it = fits.find(key);
    if (it != fits.end()) return it->second;
    const std::vector<double>& rewards =
        mode == RewardMode::Integrated ? weights.values : tt.reward;
    QFit fit;
    switch (method) {
      case Method::Naive:
        fit = fit_q_naive(tt, gamma, rewards, mode);
        break;
      case Method::Standard:
        fit = fit_q_standard(tt, gamma, rewards, mode);
        break;
      case Method::Modulated:
        fit = fit_q_modulated(tt, gamma, rewards, next_integral, mode);
        break;
    }
    return fits.emplace(key, std::move(fit)).first->second;
  };

  // modulated corrections share one jump-grid sweep across reward modes
  std::vector<Eigen::VectorXd> mod_thetas;
  std::vector<std::pair<bool, int>> mod_slot;  // (cumulative?, index)
  if (wants_mod_cum) {
    mod_thetas.push_back(fit_for(Method::Modulated, RewardMode::Cumulative).theta);
    mod_slot.emplace_back(true, static_cast<int>(mod_thetas.size()) - 1);
  }
  if (wants_mod_int) {
    mod_thetas.push_back(fit_for(Method::Modulated, RewardMode::Integrated).theta);
    mod_slot.emplace_back(false, static_cast<int>(mod_thetas.size()) - 1);
  }
  std::vector<RowMajorMatrix> mod_corr;
  if (!mod_thetas.empty())
    mod_corr = modulated_corrections(tt, *renewal, *grid, policy, mod_thetas);
  auto mod_corr_for = [&](RewardMode mode) -> const RowMajorMatrix& {
    for (const auto& [is_cum, idx] : mod_slot)
      if (is_cum == (mode == RewardMode::Cumulative)) return mod_corr[idx];
    throw std::logic_error("missing modulated correction");
  };

  RowMajorMatrix int_corr;
  bool have_int_corr = false;
  auto int_corr_ref = [&]() -> const RowMajorMatrix& {
    if (!have_int_corr) {
      int_corr = integrated_correction(tt, *renewal, weights, gamma);
      have_int_corr = true;
    }
    return int_corr;
  };

  for (const auto& req : requests) {
    const QFit& fit = fit_for(req.method, req.mode);
    const Eigen::VectorXd& zeta = zetas.at(req.mode);
    const double value = zeta.dot(fit.theta);
    EvalResult res;
    res.method = req.method;
    res.mode = req.mode;
    res.design_cond = fit.design_cond;
    if (req.method == Method::Naive) {
      // point estimate only; no large-sample variance is attached to it
      res.estimate.value = value;
      res.estimate.method = req.method;
      res.estimate.mode = req.mode;
      res.estimate.n_K = tt.n_K;
      res.estimate.has_se = false;
    } else {
      const std::vector<double>& rewards =
          req.mode == RewardMode::Integrated ? weights.values : tt.reward;
      std::vector<const RowMajorMatrix*> corrections;
      if (req.method == Method::Modulated) corrections.push_back(&mod_corr_for(req.mode));
      if (req.mode == RewardMode::Integrated) corrections.push_back(&int_corr_ref());
      InfluenceBundle bundle;
      if (corrections.empty())
        bundle = influence_standard(tt, gamma, rewards, fit);
      else
        bundle = influence_with_corrections(tt, gamma, rewards, fit, corrections);
      res.estimate =
          sandwich_estimate(bundle, zeta, value, tt.n_K, req.method, req.mode, opts.ci_level);
    }
    out.results.push_back(std::move(res));
  }
  return out;
}

}  // namespace ope
