// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Replicate studies run at desk scale (200 replicates,
// truth N = 1e5) and share outputs under acceptance_out/.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ope/experiment.hpp"
#include "ope/trajectory_io.hpp"
#include "variance_brute.hpp"

using namespace ope;
namespace fs = std::filesystem;

namespace {

struct SubCheck {
  std::string label;
  bool pass;
};

std::vector<SubCheck> subs;
int criteria_failed = 0;

void sub(const std::string& label, bool pass) { subs.push_back({label, pass}); }

void finish_criterion(int id, const std::string& title, const std::string& note = "") {
  bool all = true;
  for (const auto& s : subs) all = all && s.pass;
  if (id > 0)
    std::printf("criterion %d: %s - %s%s\n", id, all ? "PASS" : "FAIL", title.c_str(),
                note.empty() ? "" : (" (" + note + ")").c_str());
  else
    std::printf("%s: %s%s\n", all ? "PASS" : "FAIL", title.c_str(),
                note.empty() ? "" : (" (" + note + ")").c_str());
  for (const auto& s : subs)
    std::printf("    [%s] %s\n", s.pass ? "ok" : "FAIL", s.label.c_str());
  if (!all) ++criteria_failed;
  subs.clear();
  std::fflush(stdout);
}

ExperimentConfig base_config(const std::string& scenario, int n, int K, int reps,
                             const std::string& out) {
  ExperimentConfig c;
  c.scenario = scenario;
  c.grid = {{n, K}};
  c.replicates = reps;
  c.seed = 884422;
  c.truth_N = 100000;
  c.truth_seed = 424243;
  c.out_dir = out;
  c.threads = 0;
  return c;
}

const MethodSummary* row(const ExperimentResult& result, Method m, RewardMode mode) {
  for (const auto& s : result.summaries)
    if (s.method == m && s.mode == mode) return &s;
  return nullptr;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 200;
  const std::string base = "acceptance_out";
  fs::create_directories(base);

  // ---- criterion 1: truth oracle ------------------------------------------
  const double published_cum[4] = {-0.641, 0.637, 0.510, 0.594};
  const double published_int[4] = {-0.413, 0.383, 0.460, 0.569};
  std::vector<std::map<RewardMode, TruthEstimate>> truths(4);
  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 0; s < 4; ++s) {
    auto cfg = base_config("scenario" + std::to_string(s + 1), 400, 10, reps,
                           base + "/s" + std::to_string(s + 1));
    truths[s] = run_truth(cfg);
  }
  const double truth_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool scen2_int_flagged = false;
  for (int s = 0; s < 4; ++s) {
    for (int mode = 0; mode < 2; ++mode) {
      const auto& est =
          truths[s].at(mode == 0 ? RewardMode::Cumulative : RewardMode::Integrated);
      const double target = mode == 0 ? published_cum[s] : published_int[s];
      const double tol = std::max(0.01, 3.0 * est.mc_standard_error);
      const bool pass = std::abs(est.value - target) <= tol;
      if (!pass && s == 1 && mode == 1) scen2_int_flagged = true;
      sub("scenario" + std::to_string(s + 1) + " " +
              (mode == 0 ? "cumulative" : "integrated") + ": " + fmt(est.value) + " vs " +
              fmt(target) + " (tol " + fmt(tol) + ")",
          pass);
    }
  }
  sub("runtime " + fmt(truth_seconds) + "s < 300s", truth_seconds < 300.0);
  finish_criterion(1, "Monte Carlo truths reproduce the published values",
                   scen2_int_flagged
                       ? "the published scenario-2 integrated value is not consistent with "
                         "the generative recipe that reproduces the other seven values; "
                         "see README"
                       : "");

  // ---- replicate studies shared by criteria 2-6 ---------------------------
  auto cfg1 = base_config("scenario1", 400, 10, reps, base + "/s1");
  auto cfg2 = base_config("scenario2", 400, 10, reps, base + "/s2");
  auto cfg3 = base_config("scenario3", 400, 10, reps, base + "/s3");
  cfg3.reward_modes = {RewardMode::Cumulative};
  auto cfg3s = base_config("scenario3", 100, 10, reps, base + "/s3small");
  cfg3s.reward_modes = {RewardMode::Cumulative};
  cfg3s.methods = {Method::Standard, Method::Modulated};
  auto cfg4 = base_config("scenario4", 400, 10, reps, base + "/s4");
  cfg4.methods = {Method::Standard, Method::Modulated};

  std::printf("running replicate studies (%d replicates each)...\n", reps);
  std::fflush(stdout);
  const auto r1 = run_experiment(cfg1);
  const auto r2 = run_experiment(cfg2);
  const auto r3 = run_experiment(cfg3);
  const auto r3s = run_experiment(cfg3s);
  const auto r4 = run_experiment(cfg4);

  // ---- criterion 2: standard estimator unbiasedness -----------------------
  {
    const double published_sd[3] = {0.028, 0.038, 0.042};
    const ExperimentResult* runs[3] = {&r1, &r2, &r3};
    for (int s = 0; s < 3; ++s) {
      const auto* sum = row(*runs[s], Method::Standard, RewardMode::Cumulative);
      sub("scenario" + std::to_string(s + 1) + " |bias| " + fmt(std::abs(sum->bias)) +
              " <= 0.012",
          std::abs(sum->bias) <= 0.012);
      const double ratio = sum->sd / published_sd[s];
      sub("scenario" + std::to_string(s + 1) + " SD " + fmt(sum->sd) + " within 50% of " +
              fmt(published_sd[s]),
          ratio >= 0.5 && ratio <= 1.5);
    }
    finish_criterion(2, "standard estimator is unbiased with the published spread");
  }

  // ---- criterion 3: naive estimator bias -----------------------------------
  {
    const auto* n1 = row(r1, Method::Naive, RewardMode::Cumulative);
    const auto* n2 = row(r2, Method::Naive, RewardMode::Cumulative);
    sub("scenario1 naive bias " + fmt(n1->bias) + " in -0.095 +- 0.02",
        std::abs(n1->bias + 0.095) <= 0.02);
    sub("scenario2 naive bias " + fmt(n2->bias) + " in -0.397 +- 0.03",
        std::abs(n2->bias + 0.397) <= 0.03);
    finish_criterion(3, "ignoring the observation process biases the evaluation");
  }

  // ---- criterion 4: coverage ------------------------------------------------
  {
    const ExperimentResult* runs[2] = {&r1, &r2};
    for (int s = 0; s < 2; ++s) {
      for (Method m : {Method::Standard, Method::Modulated}) {
        for (RewardMode mode : {RewardMode::Cumulative, RewardMode::Integrated}) {
          const auto* sum = row(*runs[s], m, mode);
          sub("scenario" + std::to_string(s + 1) + " " + to_string(m) + " " + to_string(mode) +
                  " CP " + fmt(sum->cp),
              sum->cp >= 0.90 && sum->cp <= 0.98);
        }
      }
    }
    finish_criterion(4, "95% intervals cover at the nominal rate");
  }

  // ---- property: SE calibration (spec invariant, not a numbered criterion) --
  {
    struct Cell {
      const ExperimentResult* run;
      Method m;
      RewardMode mode;
      const char* label;
    };
    const std::vector<Cell> cells = {
        {&r1, Method::Standard, RewardMode::Cumulative, "s1 std cum"},
        {&r1, Method::Standard, RewardMode::Integrated, "s1 std int"},
        {&r1, Method::Modulated, RewardMode::Cumulative, "s1 mod cum"},
        {&r1, Method::Modulated, RewardMode::Integrated, "s1 mod int"},
        {&r2, Method::Standard, RewardMode::Cumulative, "s2 std cum"},
        {&r2, Method::Standard, RewardMode::Integrated, "s2 std int"},
        {&r2, Method::Modulated, RewardMode::Cumulative, "s2 mod cum"},
        {&r2, Method::Modulated, RewardMode::Integrated, "s2 mod int"},
        {&r3, Method::Standard, RewardMode::Cumulative, "s3 std cum"},
        {&r3, Method::Modulated, RewardMode::Cumulative, "s3 mod cum"},
    };
    for (const auto& cell : cells) {
      const auto* s = row(*cell.run, cell.m, cell.mode);
      const double ratio = s->mean_se / s->sd;
      sub(std::string(cell.label) + " mean-SE/SD ratio " + fmt(ratio) + " in [0.8, 1.25]",
          ratio >= 0.8 && ratio <= 1.25);
    }
    finish_criterion(0, "property: standard errors calibrate the sampling spread");
  }

  // ---- criterion 5: efficiency ordering -------------------------------------
  {
    const auto* sd_s = row(r3s, Method::Standard, RewardMode::Cumulative);
    const auto* sd_m = row(r3s, Method::Modulated, RewardMode::Cumulative);
    sub("scenario3 n=100: SD_M " + fmt(sd_m->sd) + " <= 1.02 * SD_S " + fmt(sd_s->sd),
        sd_m->sd <= 1.02 * sd_s->sd);
    finish_criterion(5, "the modulated estimator is no less efficient at small samples");
  }

  // ---- criterion 6: robustness under a misspecified observation model -------
  {
    const auto* sc = row(r4, Method::Standard, RewardMode::Cumulative);
    const auto* mc = row(r4, Method::Modulated, RewardMode::Cumulative);
    const auto* si = row(r4, Method::Standard, RewardMode::Integrated);
    const auto* mi = row(r4, Method::Modulated, RewardMode::Integrated);
    sub("standard cumulative |bias| " + fmt(std::abs(sc->bias)) + " <= 0.012",
        std::abs(sc->bias) <= 0.012);
    sub("modulated cumulative |bias| " + fmt(std::abs(mc->bias)) + " <= 0.03",
        std::abs(mc->bias) <= 0.03);
    sub("standard integrated |bias| " + fmt(std::abs(si->bias)) + " <= 0.03",
        std::abs(si->bias) <= 0.03);
    sub("modulated integrated |bias| " + fmt(std::abs(mi->bias)) + " <= 0.03",
        std::abs(mi->bias) <= 0.03);
    finish_criterion(6, "estimators stay nearly unbiased under scheme-2 data");
  }

  // ---- criterion 7: renewal-fit oracle suite --------------------------------
  {
    {
      const Dataset data =
          gen_dataset(ScenarioSpec::by_name("scenario2"), 1000, 10, PolicySpec::uniform(2), 23);
      const auto fit = fit_renewal(data, CovariateBuilder::scheme2(1), RenewalOptions{});
      const auto se = fit.beta_standard_errors();
      const double truth[4] = {-1.0, 0.5, 1.0, -0.5};
      bool ok = true;
      for (int j = 0; j < 4; ++j) ok = ok && std::abs(fit.beta()[j] - truth[j]) < 3.0 * se[j];
      sub("generating coefficients recovered within 3 SEs at n_K = 1e4", ok);
    }
    {
      Rng rng(39);
      const long n = 10000;
      std::vector<double> gaps(n);
      for (long i = 0; i < n; ++i) gaps[i] = rng.exponential(1.0);
      Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, 1);
      for (long i = 0; i < n; ++i) Z(i, 0) = rng.normal();
      RenewalOptions o;
      o.bandwidth = std::pow(static_cast<double>(n), -1.0 / 3.0);
      const auto fit = fit_renewal_raw(gaps, Z, o);
      double sup = 0.0;
      for (int r = 0; r < fit.tau_jump_count(); ++r)
        sup = std::max(sup, std::abs(fit.jump_cumulative()[r] - fit.jump_times()[r]));
      sub("Breslow baseline sup-error " + fmt(sup) + " < 0.05 on unit-exponential data",
          sup < 0.05);
      // interior points: inside the bandwidth margins and within the bulk of
      // the gap distribution, where the estimator's own sampling error is
      // well below the gate
      double worst = 0.0;
      for (double x = fit.bandwidth(); x <= std::min(2.0, fit.tau() - fit.bandwidth()); x += 0.1)
        worst = std::max(worst, std::abs(fit.kernel_lambda0(x) - 1.0));
      sub("kernel baseline within " + fmt(worst) + " < 0.15 of 1 at interior points",
          worst < 0.15);
    }
    {
      const Dataset data =
          gen_dataset(ScenarioSpec::by_name("scenario2"), 300, 10, PolicySpec::uniform(2), 61);
      const auto fit = fit_renewal(data, CovariateBuilder::scheme1(1), RenewalOptions{});
      double msum = 0.0;
      Eigen::VectorXd zsum = Eigen::VectorXd::Zero(fit.q());
      for (long t = 0; t < fit.n_transitions(); ++t) {
        msum += fit.mart_residual_at_tau(t);
        zsum += fit.score_residual(t);
      }
      sub("sum of martingale residuals at tau = " + fmt(msum) + " within 1e-8",
          std::abs(msum) < 1e-8);
      sub("sum of covariate-centered residual integrals within 1e-8",
          zsum.lpNorm<Eigen::Infinity>() < 1e-8);
    }
    finish_criterion(7, "renewal fit matches its independent oracles");
  }

  // ---- criterion 8: structural property suite -------------------------------
  {
    Rng rng(12345);
    const Dataset d1 =
        gen_dataset(ScenarioSpec::by_name("scenario2"), 200, 10, PolicySpec::uniform(2), 77);
    const auto policy = PolicySpec::linear_deterministic(-1.0, {-1.0}, 1.0);
    const FeatureMap map = FeatureMap::fit(BasisSpec{}, d1);
    {
      bool pu = true, ortho = true;
      std::vector<double> phi(map.tensor_size());
      for (int i = 0; i < 10000; ++i) {
        const double s = rng.uniform(-3.0, 3.0);
        const double x = rng.uniform(0.01, 6.0);
        map.tensor(&s, x, phi.data());
        double sum = 0.0;
        for (double v : phi) sum += v;
        pu = pu && std::abs(sum - 1.0) <= 1e-12;
        if (i % 100 == 0) {
          const auto f0 = map.features(&s, x, 0);
          const auto f1 = map.features(&s, x, 1);
          ortho = ortho && f0.dot(f1) == 0.0;
        }
      }
      sub("tensor basis partition of unity within 1e-12 at 1e4 points", pu);
      sub("feature blocks for distinct actions are orthogonal", ortho);
    }
    {
      const TransitionTable tt = build_transition_table(d1, map, policy);
      const auto fit = fit_renewal(d1, CovariateBuilder::scheme1_bounded(1), RenewalOptions{});
      const auto grid = build_jump_grid(fit, map, 0.7);
      const auto utilde = compute_next_integral(tt, fit, grid, policy);
      const auto weights = inverse_intensity_weights(tt, fit);
      bool bellman = true;
      auto check_fit = [&](const QFit& f, const std::vector<double>& rew) {
        const auto b = f.method == Method::Modulated
                           ? influence_with_corrections(tt, 0.7, rew, f, {})
                           : influence_standard(tt, 0.7, rew, f);
        bellman = bellman && (b.psi.colwise().mean()).lpNorm<Eigen::Infinity>() <= 1e-8;
      };
      for (RewardMode mode : {RewardMode::Cumulative, RewardMode::Integrated}) {
        const auto& rew = mode == RewardMode::Cumulative ? tt.reward : weights.values;
        check_fit(fit_q_naive(tt, 0.7, rew, mode), rew);
        check_fit(fit_q_standard(tt, 0.7, rew, mode), rew);
        check_fit(fit_q_modulated(tt, 0.7, rew, utilde, mode), rew);
      }
      sub("estimating-equation orthogonality within 1e-8 for all six fits", bellman);

      RowMajorMatrix degenerate(tt.n_K, tt.F);
      for (long t = 0; t < tt.n_K; ++t) {
        const double g = std::pow(0.7, tt.gap_next[t]);
        for (int a = 0; a < tt.m; ++a)
          for (int i = 0; i < tt.L; ++i)
            degenerate(t, a * tt.L + i) = g * tt.pin(t)[a] * tt.phin(t)[i];
      }
      const auto std_fit = fit_q_standard(tt, 0.7, tt.reward, RewardMode::Cumulative);
      const auto mod_fit =
          fit_q_modulated(tt, 0.7, tt.reward, degenerate, RewardMode::Cumulative);
      sub("gap law concentrated at observed gaps: modulated == standard within 1e-10",
          (std_fit.theta - mod_fit.theta).lpNorm<Eigen::Infinity>() < 1e-10);
    }
    {
      Dataset unit = d1;
      for (auto& traj : unit.trajectories)
        for (int k = 1; k < traj.num_obs(); ++k) {
          traj.gap_times[k] = 1.0;
          traj.times[k] = traj.times[k - 1] + 1.0;
        }
      // constant gaps leave the gap margin a single evaluation point, so only
      // a minimal basis keeps the design identifiable
      std::vector<BsplineBasis> sm{BsplineBasis(1, {})};
      const FeatureMap umap = FeatureMap::from_margins(std::move(sm), BsplineBasis(1, {}), 2);
      const TransitionTable utt = build_transition_table(unit, umap, policy);
      const auto a = fit_q_standard(utt, 0.7, utt.reward, RewardMode::Cumulative);
      const auto b = fit_q_naive(utt, 0.7, utt.reward, RewardMode::Cumulative);
      sub("unit gaps: naive == standard within 1e-10",
          (a.theta - b.theta).lpNorm<Eigen::Infinity>() < 1e-10);
    }
    {
      Dataset scaled = d1;
      const double c = 2.5;
      for (auto& traj : scaled.trajectories)
        for (auto& r : traj.rewards) r *= c;
      std::map<RewardMode, ReferenceDistribution> refs{
          {RewardMode::Cumulative, ReferenceDistribution::uniform_box1(-1, 1, 0, 2)},
          {RewardMode::Integrated, ReferenceDistribution::uniform_box1(-0.2, 0.2, 0, 1)}};
      std::vector<MethodRequest> reqs;
      for (Method m : {Method::Naive, Method::Standard, Method::Modulated})
        for (RewardMode mode : {RewardMode::Cumulative, RewardMode::Integrated})
          reqs.push_back({m, mode});
      EvalOptions opts;
      const auto ea = evaluate_dataset(d1, policy, 0.7, refs, reqs, opts);
      const auto eb = evaluate_dataset(scaled, policy, 0.7, refs, reqs, opts);
      bool equi = true;
      for (size_t i = 0; i < ea.results.size(); ++i) {
        equi = equi && std::abs(eb.results[i].estimate.value - c * ea.results[i].estimate.value) <
                           1e-9 * std::max(1.0, std::abs(c * ea.results[i].estimate.value));
        if (ea.results[i].estimate.has_se)
          equi = equi && std::abs(eb.results[i].estimate.se - c * ea.results[i].estimate.se) <
                             1e-9 * std::max(1.0, c * ea.results[i].estimate.se);
      }
      sub("reward scaling scales value and standard error linearly", equi);

      Dataset zero = d1;
      for (auto& traj : zero.trajectories)
        for (auto& r : traj.rewards) r = 0.0;
      const FeatureMap zmap = FeatureMap::fit(BasisSpec{}, zero);
      const TransitionTable ztt = build_transition_table(zero, zmap, policy);
      const auto zfit = fit_q_standard(ztt, 0.7, ztt.reward, RewardMode::Cumulative);
      sub("zero rewards give exactly zero value", zfit.theta.lpNorm<Eigen::Infinity>() == 0.0);
    }
    {
      auto small1 = base_config("scenario1", 30, 5, 4, base + "/det1");
      small1.reward_modes = {RewardMode::Cumulative};
      small1.truth_N = 4000;
      small1.threads = 1;
      auto small2 = small1;
      small2.out_dir = base + "/det2";
      small2.threads = 2;
      fs::remove_all(small1.out_dir);
      fs::remove_all(small2.out_dir);
      run_experiment(small1);
      run_experiment(small2);
      const bool same = slurp(fs::path(small1.out_dir) / "replicates.csv") ==
                        slurp(fs::path(small2.out_dir) / "replicates.csv");
      run_experiment(small1);
      const bool stable = slurp(fs::path(small1.out_dir) / "replicates.csv") ==
                          slurp(fs::path(small2.out_dir) / "replicates.csv");
      sub("replicate files byte-identical across runs and thread counts", same && stable);
    }
    finish_criterion(8, "structural properties hold");
  }

  // ---- criterion 9: variance-formula oracle ----------------------------------
  {
    BasisSpec basis;
    basis.degree = 1;
    basis.q_state = 0;
    basis.q_gap = 0;
    const Dataset data =
        gen_dataset(ScenarioSpec::by_name("scenario2"), 2, 10, PolicySpec::uniform(2), 71);
    const auto policy = PolicySpec::linear_deterministic(-1.0, {-1.0}, 1.0);
    const FeatureMap map = FeatureMap::fit(basis, data);
    const TransitionTable tt = build_transition_table(data, map, policy);
    const auto fit = fit_renewal(data, CovariateBuilder::scheme1(1), RenewalOptions{});
    const auto grid = build_jump_grid(fit, map, 0.7);

    const auto std_fit = fit_q_standard(tt, 0.7, tt.reward, RewardMode::Cumulative);
    const auto std_bundle = influence_standard(tt, 0.7, tt.reward, std_fit);
    const double err1 =
        (std_bundle.omega - brute::omega_standard(data, map, policy, 0.7, std_fit))
            .lpNorm<Eigen::Infinity>();
    sub("standard sandwich matrix matches brute force within 1e-10 (err " + fmt(err1) + ")",
        err1 < 1e-10);

    const auto utilde = compute_next_integral(tt, fit, grid, policy);
    const auto mod_fit = fit_q_modulated(tt, 0.7, tt.reward, utilde, RewardMode::Cumulative);
    const auto corr = modulated_corrections(tt, fit, grid, policy, {mod_fit.theta});
    const auto mod_bundle =
        influence_with_corrections(tt, 0.7, tt.reward, mod_fit, {&corr[0]});
    const double err2 =
        (mod_bundle.omega - brute::omega_modulated(data, map, policy, 0.7, fit, tt, mod_fit))
            .lpNorm<Eigen::Infinity>();
    sub("modulated sandwich matrix matches brute force within 1e-10 (err " + fmt(err2) + ")",
        err2 < 1e-10);
    finish_criterion(9, "sandwich matrices match independent brute-force summation");
  }

  std::printf("acceptance: %d of 9 criteria failed\n", criteria_failed);
  return criteria_failed;
}
