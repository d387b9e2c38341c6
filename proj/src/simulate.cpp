#include "ope/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace ope {

void ScenarioSpec::check() const {
  if (!(baseline_rate > 0.0)) throw std::invalid_argument("scenario: baseline intensity must be > 0");
  if (state_model == StateModel::S3 && gap_model == GapModel::X3)
    throw std::invalid_argument("scenario: S3 with X3 has circular dependence");
  if (custom) return;
  const bool known = (state_model == StateModel::S1 && gap_model == GapModel::X1) ||
                     (state_model == StateModel::S2 && gap_model == GapModel::X2) ||
                     (state_model == StateModel::S2 && gap_model == GapModel::X3) ||
                     (state_model == StateModel::S3 && gap_model == GapModel::X2);
  if (!known)
    throw std::invalid_argument("scenario: unknown (state, gap) pair; set custom=true to allow");
}

ScenarioSpec ScenarioSpec::by_name(const std::string& name) {
  ScenarioSpec s;
  if (name == "scenario1") {
    s.state_model = StateModel::S1;
    s.gap_model = GapModel::X1;
  } else if (name == "scenario2") {
    s.state_model = StateModel::S2;
    s.gap_model = GapModel::X2;
  } else if (name == "scenario3") {
    s.state_model = StateModel::S2;
    s.gap_model = GapModel::X3;
  } else if (name == "scenario4") {
    s.state_model = StateModel::S3;
    s.gap_model = GapModel::X2;
  } else {
    throw std::invalid_argument("unknown scenario name: " + name);
  }
  return s;
}

double gen_state(StateModel model, double s, double x, int a, std::optional<double> x_next,
                 double noise_sd, Rng& rng) {
  if (model == StateModel::S3 && !x_next)
    throw std::invalid_argument("gen_state: S3 requires the next gap time");
  if (model != StateModel::S3 && x_next)
    throw std::invalid_argument("gen_state: only S3 reads the next gap time");
  const double dir = 2.0 * a - 1.0;
  double coef = 0.75;
  if (model == StateModel::S2 || model == StateModel::S3) coef -= 0.25 * (x < 0.5 ? 1.0 : 0.0);
  if (model == StateModel::S3) coef += 0.25 * (*x_next > 1.0 ? 1.0 : 0.0);
  return coef * dir * s + rng.normal(0.0, noise_sd);
}

static double gap_log_risk(GapModel model, double s, double x, int a, double s_next) {
  switch (model) {
    case GapModel::X1:
      return 0.0;
    case GapModel::X2:
      return -s + 0.5 * x + a - 0.5 * s * a;
    case GapModel::X3:
      return -s + 0.5 * x + a - 0.5 * s * a + 0.5 * s_next;
  }
  return 0.0;
}

double sample_gap(GapModel model, double s, double x, int a, std::optional<double> s_next,
                  double baseline_rate, Rng& rng) {
  if (model == GapModel::X3 && !s_next)
    throw std::invalid_argument("sample_gap: X3 requires the next state");
  if (model != GapModel::X3 && s_next)
    throw std::invalid_argument("sample_gap: only X3 reads the next state");
  const double rate = baseline_rate * std::exp(gap_log_risk(model, s, x, a, s_next ? *s_next : 0.0));
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw std::invalid_argument("sample_gap: nonpositive or non-finite intensity");
  return rng.exponential(1.0) / rate;
}

double true_log_risk(const ScenarioSpec& spec, double s, double x, int a, double s_next) {
  return gap_log_risk(spec.gap_model, s, x, a, s_next);
}

namespace {

struct Step {
  double s_next;
  double x_next;
};

// Draws (S_{k+1}, X_{k+1}) in the order the scenario's dependence requires.
Step advance(const ScenarioSpec& spec, double s, double x, int a, Rng& rng) {
  Step st;
  if (spec.gap_first()) {
    st.x_next = sample_gap(spec.gap_model, s, x, a, std::nullopt, spec.baseline_rate, rng);
    st.s_next = gen_state(spec.state_model, s, x, a, st.x_next, spec.state_noise_sd, rng);
  } else {
    st.s_next = gen_state(spec.state_model, s, x, a, std::nullopt, spec.state_noise_sd, rng);
    std::optional<double> pass =
        spec.gap_model == GapModel::X3 ? std::optional<double>(st.s_next) : std::nullopt;
    st.x_next = sample_gap(spec.gap_model, s, x, a, pass, spec.baseline_rate, rng);
  }
  return st;
}

double reward_mean(double s, double s_next, int a, double x_next) {
  return (s_next - s - 0.5 * (2.0 * a - 1.0)) * x_next;
}

int draw_action(const PolicySpec& policy, double s, double x, Rng& rng) {
  double probs[16];
  policy.action_probs(&s, 1, x, probs);
  double u = rng.uniform();
  double acc = 0.0;
  for (int a = 0; a < policy.m; ++a) {
    acc += probs[a];
    if (u < acc) return a;
  }
  return policy.m - 1;
}

}  // namespace

Dataset gen_dataset(const ScenarioSpec& spec, int n, int K, const PolicySpec& behavior,
                    uint64_t seed) {
  spec.check();
  if (n < 1 || K < 1) throw std::invalid_argument("gen_dataset: need n >= 1 and K >= 1");
  Dataset data;
  data.d = 1;
  data.m = behavior.m;
  data.trajectories.resize(n);
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, static_cast<uint64_t>(i));
    Trajectory traj;
    traj.d = 1;
    traj.times.reserve(K + 1);
    traj.gap_times.reserve(K + 1);
    traj.states.reserve(K + 1);
    traj.actions.reserve(K + 1);
    traj.rewards.reserve(K);

    double s = rng.uniform(-1.5, 1.5);
    double x = rng.exponential(0.5);
    int a = draw_action(behavior, s, x, rng);
    traj.times.push_back(0.0);
    traj.gap_times.push_back(x);
    traj.states.push_back(s);
    traj.actions.push_back(a);

    for (int k = 0; k < K; ++k) {
      const Step st = advance(spec, s, x, a, rng);
      const double r = reward_mean(s, st.s_next, a, st.x_next) + rng.normal(0.0, spec.reward_noise_sd);
      s = st.s_next;
      x = st.x_next;
      a = draw_action(behavior, s, x, rng);
      traj.times.push_back(traj.times.back() + x);
      traj.gap_times.push_back(x);
      traj.states.push_back(s);
      traj.actions.push_back(a);
      traj.rewards.push_back(r);
    }
    data.trajectories[i] = std::move(traj);
  }
  return data;
}

TruthEstimate monte_carlo_truth(const ScenarioSpec& spec, const PolicySpec& policy,
                                const ReferenceDistribution& g, double gamma, long N,
                                double tail_tol, uint64_t seed, RewardMode mode) {
  spec.check();
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("monte_carlo_truth: gamma in (0,1)");
  if (N < 1) throw std::invalid_argument("monte_carlo_truth: N >= 1");
  if (!(tail_tol > 0.0)) throw std::invalid_argument("monte_carlo_truth: tail_tol must be > 0");
  const double log_gamma = std::log(gamma);
  const double horizon = std::log(tail_tol) / log_gamma;  // gamma^t < tol iff t > horizon

  double sum = 0.0, sumsq = 0.0;
  for (long j = 0; j < N; ++j) {
    Rng rng = Rng::stream(seed, static_cast<uint64_t>(j));
    auto [s0, x0] = sample_reference(g, rng);
    double s = s0[0];
    double x = x0;
    int a = draw_action(policy, s, x, rng);
    double t = 0.0;
    double total = 0.0;
    while (true) {
      const Step st = advance(spec, s, x, a, rng);
      const double r = reward_mean(s, st.s_next, a, st.x_next) + rng.normal(0.0, spec.reward_noise_sd);
      t += st.x_next;
      if (t > horizon) break;
      double contrib = std::exp(t * log_gamma) * r;
      if (mode == RewardMode::Integrated)
        contrib /= true_intensity(spec, s, x, a, st.s_next);
      total += contrib;
      s = st.s_next;
      x = st.x_next;
      a = draw_action(policy, s, x, rng);
    }
    sum += total;
    sumsq += total * total;
  }
  TruthEstimate est;
  est.N = N;
  est.reward_mode = mode;
  est.value = sum / N;
  if (N > 1) {
    const double var = (sumsq - sum * sum / N) / (N - 1);
    est.mc_standard_error = std::sqrt(var > 0 ? var / N : 0.0);
  }
  return est;
}

}  // namespace ope
