#include "ope/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ope/bspline.hpp"

namespace ope {

CovariateBuilder CovariateBuilder::scheme1(int d) {
  CovariateBuilder b;
  b.dim = 3 * d + 2;
  b.fill = [d](const double* s_next, const double* s, double x, int a, double* out) {
    int j = 0;
    for (int i = 0; i < d; ++i) out[j++] = s_next[i];
    for (int i = 0; i < d; ++i) out[j++] = s[i];
    out[j++] = x;
    out[j++] = a;
    for (int i = 0; i < d; ++i) out[j++] = s[i] * a;
  };
  return b;
}

CovariateBuilder CovariateBuilder::scheme2(int d) {
  CovariateBuilder b;
  b.dim = 2 * d + 2;
  b.fill = [d](const double*, const double* s, double x, int a, double* out) {
    int j = 0;
    for (int i = 0; i < d; ++i) out[j++] = s[i];
    out[j++] = x;
    out[j++] = a;
    for (int i = 0; i < d; ++i) out[j++] = s[i] * a;
  };
  return b;
}

CovariateBuilder CovariateBuilder::scheme1_bounded(int d) {
  CovariateBuilder b = scheme1(d);
  const auto raw = b.fill;
  b.fill = [raw, d](const double* s_next, const double* s, double x, int a, double* out) {
    raw(s_next, s, std::log1p(x), a, out);
  };
  return b;
}

CovariateBuilder CovariateBuilder::scheme2_bounded(int d) {
  CovariateBuilder b = scheme2(d);
  const auto raw = b.fill;
  b.fill = [raw, d](const double* s_next, const double* s, double x, int a, double* out) {
    raw(s_next, s, std::log1p(x), a, out);
  };
  return b;
}

namespace {

struct SweepResult {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;  // negative Jacobian of the score
};

// One pass over transitions sorted by gap descending: accumulates the
// estimating function, its negative Jacobian, and the partial-likelihood
// analogue over events (gaps <= tau). Ties share a risk set.
SweepResult sweep(const std::vector<double>& gaps, const Eigen::MatrixXd& Z,
                  const std::vector<long>& order_desc, double tau, const Eigen::VectorXd& beta,
                  bool want_info) {
  const long n = static_cast<long>(gaps.size());
  const int q = static_cast<int>(Z.cols());
  SweepResult res;
  res.score = Eigen::VectorXd::Zero(q);
  res.info = Eigen::MatrixXd::Zero(q, q);

  double a0 = 0.0;
  Eigen::VectorXd a1 = Eigen::VectorXd::Zero(q);
  Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(q, q);

  long pos = 0;
  while (pos < n) {
    const double u = gaps[order_desc[pos]];
    // everyone with gap >= u enters the risk set
    while (pos < n && gaps[order_desc[pos]] == u) {
      const long t = order_desc[pos];
      const double w = std::exp(beta.dot(Z.row(t)));
      a0 += w;
      a1 += w * Z.row(t).transpose();
      if (want_info) a2 += w * Z.row(t).transpose() * Z.row(t);
      ++pos;
    }
    // look ahead: ties below u were already added above only if equal to u;
    // gaps strictly smaller enter later
    if (u > tau) continue;
    // events at u
    long first = pos - 1;
    while (first >= 0 && gaps[order_desc[first]] == u) --first;
    const Eigen::VectorXd zbar = a1 / a0;
    for (long e = first + 1; e < pos; ++e) {
      const long t = order_desc[e];
      res.score += Z.row(t).transpose() - zbar;
      res.loglik += beta.dot(Z.row(t)) - std::log(a0);
    }
    if (want_info) {
      const double ties = static_cast<double>(pos - first - 1);
      res.info += ties * (a2 / a0 - zbar * zbar.transpose());
    }
  }
  res.score /= static_cast<double>(n);
  res.info /= static_cast<double>(n);
  res.loglik /= static_cast<double>(n);
  return res;
}

}  // namespace

BreslowTable breslow_baseline(const std::vector<double>& gaps, const Eigen::MatrixXd& Z,
                              const Eigen::VectorXd& beta, double tau) {
  const long n = static_cast<long>(gaps.size());
  const int q = static_cast<int>(Z.cols());
  if (n < 1 || Z.rows() != n) throw std::invalid_argument("breslow_baseline: bad inputs");
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](long a, long b) { return gaps[a] > gaps[b]; });

  // every distinct gap is a jump of the step baseline; the information matrix
  // accumulates only over events at or below tau, matching the score equation
  double a0 = 0.0;
  Eigen::VectorXd a1 = Eigen::VectorXd::Zero(q);
  Eigen::MatrixXd a2 = Eigen::MatrixXd::Zero(q, q);
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(q, q);
  std::vector<double> jx, js0;
  std::vector<int> jties;
  std::vector<Eigen::VectorXd> jzbar;
  long pos = 0;
  while (pos < n) {
    const double u = gaps[order[pos]];
    long begin = pos;
    while (pos < n && gaps[order[pos]] == u) {
      const long t = order[pos];
      const double w = std::exp(beta.dot(Z.row(t)));
      a0 += w;
      a1 += w * Z.row(t).transpose();
      a2 += w * Z.row(t).transpose() * Z.row(t);
      ++pos;
    }
    if (!(a0 > 0.0)) throw std::runtime_error("breslow_baseline: empty risk set");
    const int ties = static_cast<int>(pos - begin);
    const Eigen::VectorXd zbar = a1 / a0;
    jx.push_back(u);
    js0.push_back(a0 / static_cast<double>(n));
    jties.push_back(ties);
    jzbar.push_back(zbar);
    if (u <= tau) omega += ties * (a2 / a0 - zbar * zbar.transpose()) / static_cast<double>(n);
  }
  if (jx.empty()) throw std::runtime_error("breslow_baseline: no events");

  BreslowTable table;
  const int J = static_cast<int>(jx.size());
  for (int r = 0; r < J; ++r)
    if (jx[J - 1 - r] <= tau) table.tau_index = std::max(table.tau_index, r + 1);
  table.x.resize(J);
  table.s0.resize(J);
  table.ties.resize(J);
  table.dL.resize(J);
  table.L.resize(J);
  table.zbar.resize(J, q);
  table.zbar_prefix.resize(J, q);
  table.info = omega;
  double cum = 0.0;
  Eigen::VectorXd zcum = Eigen::VectorXd::Zero(q);
  for (int r = 0; r < J; ++r) {
    const int src = J - 1 - r;
    table.x[r] = jx[src];
    table.s0[r] = js0[src];
    table.ties[r] = jties[src];
    const double dl = jties[src] / (js0[src] * static_cast<double>(n));
    table.dL[r] = dl;
    cum += dl;
    table.L[r] = cum;
    table.zbar.row(r) = jzbar[src].transpose();
    zcum += jzbar[src] * dl;
    table.zbar_prefix.row(r) = zcum.transpose();
  }
  return table;
}

RenewalFit fit_renewal_raw(std::vector<double> gaps, Eigen::MatrixXd Z,
                           const RenewalOptions& opts) {
  const long n = static_cast<long>(gaps.size());
  const int q = static_cast<int>(Z.cols());
  if (n < 1 || Z.rows() != n) throw std::invalid_argument("fit_renewal: bad inputs");

  RenewalFit fit;

  // tau: explicit, or the configured gap quantile lowered until enough gaps
  // stay beyond it.
  std::vector<double> sorted(gaps);
  std::sort(sorted.begin(), sorted.end());
  double tau;
  if (opts.tau > 0.0) {
    tau = opts.tau;
  } else {
    tau = sample_quantile(sorted, opts.tau_quantile);
    const long want = std::min<long>(opts.min_tail_risk, n - 1);
    if (want > 0 && sorted[n - want] <= tau) {
      // value strictly below the `want` largest gaps
      tau = sorted[n - want] * (1.0 - 1e-12);
    }
  }

  long n_events = 0;
  for (double g : gaps)
    if (g <= tau) ++n_events;
  if (n_events < q + 1)
    throw ConditioningError("fit_renewal: fewer events at/below tau than covariates + 1");

  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](long a, long b) { return gaps[a] > gaps[b]; });

  // Newton-Raphson from beta = 0 with two safeguards: the step is scaled so
  // no observation's log risk moves by more than 5 in one iteration, and it
  // is halved while the partial-likelihood analogue decreases.
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  SweepResult cur = sweep(gaps, Z, order, tau, beta, true);
  int iter = 0;
  bool converged = cur.score.lpNorm<Eigen::Infinity>() <= opts.newton_tol;
  while (!converged && iter < opts.max_iter) {
    ++iter;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(cur.info);
    if (lu.rank() < q) {
      const int offending = lu.permutationQ().indices()[lu.rank()];
      throw ConditioningError("fit_renewal: singular information matrix; covariate " +
                              std::to_string(offending) + " is redundant or collinear");
    }
    Eigen::VectorXd step = lu.solve(cur.score);
    const double max_shift = (Z * step).lpNorm<Eigen::Infinity>();
    if (max_shift > 5.0) step *= 5.0 / max_shift;
    double scale = 1.0;
    SweepResult next;
    int halvings = 0;
    while (true) {
      next = sweep(gaps, Z, order, tau, beta + scale * step, true);
      if (next.loglik >= cur.loglik - 1e-14 || halvings >= opts.max_halvings) break;
      scale *= 0.5;
      ++halvings;
    }
    beta += scale * step;
    cur = std::move(next);
    converged = cur.score.lpNorm<Eigen::Infinity>() <= opts.newton_tol;
  }
  if (!converged)
    throw ConvergenceError("fit_renewal: Newton did not converge in " +
                               std::to_string(opts.max_iter) + " iterations",
                           beta);

  // one polishing step so the score identities hold to machine precision
  {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(cur.info);
    if (lu.rank() == q) {
      const Eigen::VectorXd polished = beta + lu.solve(cur.score);
      const SweepResult after = sweep(gaps, Z, order, tau, polished, true);
      if (after.score.lpNorm<Eigen::Infinity>() < cur.score.lpNorm<Eigen::Infinity>()) {
        beta = polished;
        cur = after;
      }
    }
  }

  fit.gaps_ = std::move(gaps);
  fit.Z_ = std::move(Z);
  fit.beta_ = beta;
  fit.tau_ = tau;
  fit.newton_iterations_ = iter;
  fit.score_norm_ = cur.score.lpNorm<Eigen::Infinity>();

  fit.risk_.resize(n);
  for (long t = 0; t < n; ++t) fit.risk_[t] = std::exp(beta.dot(fit.Z_.row(t)));

  BreslowTable table = breslow_baseline(fit.gaps_, fit.Z_, beta, tau);
  fit.jump_x_ = std::move(table.x);
  fit.jump_dL_ = std::move(table.dL);
  fit.jump_L_ = std::move(table.L);
  fit.jump_s0_ = std::move(table.s0);
  fit.jump_ties_ = std::move(table.ties);
  fit.jump_zbar_ = std::move(table.zbar);
  fit.jump_zbar_prefix_ = std::move(table.zbar_prefix);
  fit.omega_ = std::move(table.info);
  fit.tau_index_ = table.tau_index;

  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.omega_);
    if (es.eigenvalues().minCoeff() < -1e-8)
      throw std::runtime_error("fit_renewal: information matrix not positive semidefinite");
  }

  // per-transition jump indices
  fit.event_index_.resize(n);
  fit.le_index_.resize(n);
  for (long t = 0; t < n; ++t) {
    const double g = fit.gaps_[t];
    const double capped = std::min(g, tau);
    auto it = std::upper_bound(fit.jump_x_.begin(), fit.jump_x_.end(), capped);
    fit.le_index_[t] = static_cast<int>(it - fit.jump_x_.begin()) - 1;
    if (g <= tau) {
      auto eit = std::lower_bound(fit.jump_x_.begin(), fit.jump_x_.end(), g);
      fit.event_index_[t] = static_cast<int>(eit - fit.jump_x_.begin());
    } else {
      fit.event_index_[t] = -1;  // beyond tau: no event on the truncated window
    }
  }

  // bandwidth: scale * sd(gaps) * n_K^(-1/3)
  if (opts.bandwidth > 0.0) {
    fit.bandwidth_ = opts.bandwidth;
  } else {
    double mean = 0.0;
    for (double g : fit.gaps_) mean += g;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double g : fit.gaps_) ss += (g - mean) * (g - mean);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 1.0;
    fit.bandwidth_ = opts.bandwidth_scale * (sd > 0 ? sd : 1.0) *
                     std::pow(static_cast<double>(n), -1.0 / 3.0);
  }
  return fit;
}

RenewalFit fit_renewal(const Dataset& data, const CovariateBuilder& builder,
                       const RenewalOptions& opts) {
  const long n_k = data.total_transitions();
  std::vector<double> gaps;
  gaps.reserve(n_k);
  Eigen::MatrixXd Z(n_k, builder.dim);
  std::vector<double> zbuf(builder.dim);
  long t = 0;
  for (const auto& traj : data.trajectories) {
    for (int k = 0; k < traj.num_transitions(); ++k) {
      gaps.push_back(traj.gap_times[k + 1]);
      builder.fill(traj.state(k + 1), traj.state(k), traj.gap_times[k], traj.actions[k],
                   zbuf.data());
      Z.row(t) = Eigen::Map<Eigen::VectorXd>(zbuf.data(), builder.dim).transpose();
      ++t;
    }
  }
  return fit_renewal_raw(std::move(gaps), std::move(Z), opts);
}

double RenewalFit::Lambda0(double x) const {
  if (jump_x_.empty() || x < jump_x_.front()) return 0.0;
  auto it = std::upper_bound(jump_x_.begin(), jump_x_.end(), x);
  const int idx = static_cast<int>(it - jump_x_.begin()) - 1;
  return idx >= 0 ? jump_L_[idx] : 0.0;
}

double RenewalFit::Px_risk(double x, double risk) const {
  if (x <= 0.0) return 0.0;
  return -std::expm1(-Lambda0(x) * risk);
}

double RenewalFit::stieltjes_expectation(double risk, const std::function<double(double)>& g) const {
  double total = 0.0;
  double surv_prev = 1.0;
  for (size_t r = 0; r < jump_x_.size(); ++r) {
    const double surv = std::exp(-jump_L_[r] * risk);
    total += g(jump_x_[r]) * (surv_prev - surv);
    surv_prev = surv;
  }
  return total;
}

double RenewalFit::kernel_lambda0(double x) const {
  const double b = bandwidth_;
  const auto tau_end = jump_x_.begin() + tau_index_;
  auto window = [&](double center) {
    double acc = 0.0;
    auto lo = std::lower_bound(jump_x_.begin(), tau_end, center - b);
    auto hi = std::upper_bound(jump_x_.begin(), tau_end, center + b);
    for (auto it = lo; it != hi; ++it) {
      const size_t r = it - jump_x_.begin();
      const double u = (*it - center) / b;
      acc += 0.75 * (1.0 - u * u) / b * jump_dL_[r];
    }
    return acc;
  };
  // reflection at both ends of [0, tau]
  return window(x) + window(-x) + window(2.0 * tau_ - x);
}

double RenewalFit::mart_residual(long t, double x) const {
  const double capped = std::min(x, tau_);
  const double counted = (gaps_[t] <= capped) ? 1.0 : 0.0;
  return counted - risk_[t] * Lambda0(std::min(capped, gaps_[t]));
}

double RenewalFit::mart_residual_at_tau(long t) const { return mart_residual(t, tau_); }

Eigen::VectorXd RenewalFit::score_residual(long t) const {
  const int nq = q();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(nq);
  if (event_index_[t] >= 0)
    out = Z_.row(t).transpose() - jump_zbar_.row(event_index_[t]).transpose();
  const int le = le_index_[t];
  if (le >= 0) {
    out -= risk_[t] *
           (Z_.row(t).transpose() * jump_L_[le] - jump_zbar_prefix_.row(le).transpose());
  }
  return out;
}

Eigen::MatrixXd RenewalFit::information_inverse() const {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(omega_);
  if (lu.rank() < q())
    throw ConditioningError("renewal information matrix is singular");
  return lu.inverse();
}

Eigen::VectorXd RenewalFit::beta_standard_errors() const {
  const Eigen::MatrixXd inv = information_inverse();
  Eigen::VectorXd se(q());
  for (int j = 0; j < q(); ++j)
    se[j] = std::sqrt(inv(j, j) / static_cast<double>(n_transitions()));
  return se;
}

}  // namespace ope
