#include <doctest.h>

#include <cmath>

#include "ope/renewal.hpp"
#include "ope/rng.hpp"
#include "ope/simulate.hpp"

using namespace ope;

namespace {

RenewalOptions opts_with_tau(double tau) {
  RenewalOptions o;
  o.tau = tau;
  return o;
}

}  // namespace

TEST_CASE("tied two-transition fit has the closed-form solution zero") {
  // both events share one risk set, so the score vanishes only at beta = 0
  std::vector<double> gaps = {1.3, 1.3};
  Eigen::MatrixXd Z(2, 1);
  Z << 0.7, -0.4;
  const auto fit = fit_renewal_raw(gaps, Z, opts_with_tau(2.0));
  CHECK(std::abs(fit.beta()[0]) < 1e-8);
}

TEST_CASE("three-transition fit matches an independent bisection of the score") {
  // covariates (0, 1, -1) with ascending distinct gaps: the score reduces to
  // zbar(x1; b) + tanh(b) = 1, solvable by bisection
  std::vector<double> gaps = {0.5, 1.0, 2.0};
  Eigen::MatrixXd Z(3, 1);
  Z << 0.0, 1.0, -1.0;
  const auto fit = fit_renewal_raw(gaps, Z, opts_with_tau(3.0));

  auto score = [](double b) {
    const double zbar1 = (std::exp(b) - std::exp(-b)) / (1.0 + std::exp(b) + std::exp(-b));
    return (0.0 - zbar1) + (1.0 - std::tanh(b));
  };
  double lo = 0.0, hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (score(mid) > 0.0 ? lo : hi) = mid;
  }
  CHECK(fit.beta()[0] == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-8));
}

TEST_CASE("covariate-free gap data drives all coefficients to zero") {
  const auto spec = ScenarioSpec::by_name("scenario1");
  const Dataset data = gen_dataset(spec, 1000, 10, PolicySpec::uniform(2), 17);
  const auto fit = fit_renewal(data, CovariateBuilder::scheme1(1), RenewalOptions{});
  const auto se = fit.beta_standard_errors();
  for (int j = 0; j < fit.q(); ++j) CHECK(std::abs(fit.beta()[j]) < 3.0 * se[j]);
  CHECK(fit.score_norm() <= 1e-10);
}

TEST_CASE("fit recovers the generating coefficients of the second gap model") {
  const auto spec = ScenarioSpec::by_name("scenario2");
  const Dataset data = gen_dataset(spec, 1000, 10, PolicySpec::uniform(2), 23);
  const auto fit = fit_renewal(data, CovariateBuilder::scheme2(1), RenewalOptions{});
  const auto se = fit.beta_standard_errors();
  const double truth[] = {-1.0, 0.5, 1.0, -0.5};
  for (int j = 0; j < 4; ++j) CHECK(std::abs(fit.beta()[j] - truth[j]) < 3.0 * se[j]);
}

TEST_CASE("constant covariate raises a conditioning error") {
  std::vector<double> gaps = {0.4, 0.9, 1.7, 2.2, 0.6, 1.1};
  Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(6, 1);
  // score is identically zero at beta = 0, so the fit converges immediately;
  // the information matrix is singular and its inverse must refuse
  const auto fit = fit_renewal_raw(gaps, Z, opts_with_tau(3.0));
  CHECK(fit.beta()[0] == 0.0);
  CHECK_THROWS_AS(fit.information_inverse(), ConditioningError);
}

TEST_CASE("baseline at beta = 0 is the Nelson-Aalen estimator") {
  std::vector<double> gaps = {0.5, 1.5, 2.5, 3.5, 4.5};
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(5, 1);
  for (int i = 0; i < 5; ++i) Z(i, 0) = i;  // irrelevant at beta = 0
  const auto table = breslow_baseline(gaps, Z, Eigen::VectorXd::Zero(1), 5.0);
  REQUIRE(table.x.size() == 5);
  const long n = 5;
  for (int j = 0; j < 5; ++j)
    CHECK(table.dL[j] == doctest::Approx(1.0 / static_cast<double>(n - j)).epsilon(1e-15));
}

TEST_CASE("baseline is invariant to dataset duplication") {
  Rng rng(31);
  std::vector<double> gaps;
  Eigen::MatrixXd Z(40, 1);
  for (int i = 0; i < 40; ++i) {
    gaps.push_back(rng.exponential(1.0));
    Z(i, 0) = rng.normal();
  }
  const auto fit1 = fit_renewal_raw(gaps, Z, opts_with_tau(10.0));
  std::vector<double> gaps2(gaps);
  gaps2.insert(gaps2.end(), gaps.begin(), gaps.end());
  Eigen::MatrixXd Z2(80, 1);
  Z2 << Z, Z;
  const auto fit2 = fit_renewal_raw(gaps2, Z2, opts_with_tau(10.0));
  CHECK(fit1.beta()[0] == doctest::Approx(fit2.beta()[0]).epsilon(1e-9));
  REQUIRE(fit1.jump_times().size() == fit2.jump_times().size());
  for (size_t r = 0; r < fit1.jump_times().size(); ++r) {
    CHECK(fit1.jump_times()[r] == fit2.jump_times()[r]);
    CHECK(fit1.jump_increments()[r] == doctest::Approx(fit2.jump_increments()[r]).epsilon(1e-9));
  }
}

TEST_CASE("baseline tracks the identity on unit-exponential data") {
  Rng rng(39);
  const long n = 10000;
  std::vector<double> gaps(n);
  for (long i = 0; i < n; ++i) gaps[i] = rng.exponential(1.0);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, 1);
  for (long i = 0; i < n; ++i) Z(i, 0) = rng.normal();
  const auto fit = fit_renewal_raw(gaps, Z, RenewalOptions{});
  double sup = 0.0;
  for (int r = 0; r < fit.tau_jump_count(); ++r)
    sup = std::max(sup, std::abs(fit.jump_cumulative()[r] - fit.jump_times()[r]));
  CHECK(sup < 0.05);
}

TEST_CASE("gap-law evaluation: boundary values, monotonicity, exponential oracle") {
  Rng rng(41);
  const long n = 10000;
  std::vector<double> gaps(n);
  for (long i = 0; i < n; ++i) gaps[i] = rng.exponential(1.0);
  Eigen::MatrixXd Z(n, 1);
  for (long i = 0; i < n; ++i) Z(i, 0) = rng.normal();
  const auto fit = fit_renewal_raw(gaps, Z, RenewalOptions{});

  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(1);
  CHECK(fit.Px(0.0, z0) == 0.0);
  CHECK(fit.Px(1.0, z0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.03));
  // flat beyond the largest observed gap
  const double back = fit.jump_times().back();
  CHECK(fit.Px(back + 5.0, z0) == fit.Px(back, z0));
  CHECK(fit.Px(back, z0) > fit.Px(fit.tau(), z0));
  // a large linear predictor pushes the captured mass to one
  Eigen::VectorXd zbig(1);
  zbig << 40.0 / std::max(std::abs(fit.beta()[0]), 1e-3) * (fit.beta()[0] >= 0 ? 1.0 : -1.0);
  CHECK(fit.Px(fit.tau(), zbig) > 0.999);
  // nondecreasing in x
  double prev = 0.0;
  for (double x = 0.1; x < 4.0; x += 0.1) {
    const double p = fit.Px(x, z0);
    CHECK(p >= prev);
    prev = p;
  }
  // pointwise monotone in the risk score: larger risk, stochastically smaller gaps
  for (double x = 0.25; x < 3.0; x += 0.5)
    CHECK(fit.Px_risk(x, 0.5) < fit.Px_risk(x, 2.0));
}

TEST_CASE("stieltjes expectation: constant, indicator, and discount oracles") {
  Rng rng(43);
  const long n = 10000;
  std::vector<double> gaps(n);
  for (long i = 0; i < n; ++i) gaps[i] = rng.exponential(1.0);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, 1);
  const auto fit = fit_renewal_raw(gaps, Z, RenewalOptions{});
  const double w = 1.0;  // beta = 0 risk score

  const double total = fit.stieltjes_expectation(w, [](double) { return 1.0; });
  CHECK(total == doctest::Approx(fit.Px_risk(fit.jump_times().back(), w)).epsilon(1e-12));

  const double median = fit.jump_times()[fit.jump_count() / 2];
  const double part =
      fit.stieltjes_expectation(w, [&](double x) { return x <= median ? 1.0 : 0.0; });
  CHECK(part == doctest::Approx(fit.Px_risk(median, w)).epsilon(1e-12));

  const double gamma = 0.7;
  const double disc = fit.stieltjes_expectation(w, [&](double x) { return std::pow(gamma, x); });
  CHECK(std::abs(disc - 1.0 / (1.0 - std::log(gamma))) < 0.03);
}

TEST_CASE("kernel baseline is near one on unit-exponential data") {
  Rng rng(47);
  const long n = 10000;
  std::vector<double> gaps(n);
  for (long i = 0; i < n; ++i) gaps[i] = rng.exponential(1.0);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, 1);
  RenewalOptions o;
  o.bandwidth = std::pow(static_cast<double>(n), -1.0 / 3.0);
  const auto fit = fit_renewal_raw(gaps, Z, o);
  for (double x = fit.bandwidth(); x <= std::min(2.0, fit.tau() - fit.bandwidth()); x += 0.17)
    CHECK(std::abs(fit.kernel_lambda0(x) - 1.0) < 0.15);
}

TEST_CASE("kernel baseline is invariant to duplicating the data") {
  Rng rng(53);
  std::vector<double> gaps;
  for (int i = 0; i < 200; ++i) gaps.push_back(rng.exponential(1.0));
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(200, 1);
  RenewalOptions o = opts_with_tau(3.0);
  o.bandwidth = 0.3;
  const auto fit1 = fit_renewal_raw(gaps, Z, o);
  std::vector<double> gaps2(gaps);
  gaps2.insert(gaps2.end(), gaps.begin(), gaps.end());
  const auto fit2 = fit_renewal_raw(gaps2, Eigen::MatrixXd::Zero(400, 1), o);
  for (double x = 0.2; x < 2.8; x += 0.3)
    CHECK(fit1.kernel_lambda0(x) == doctest::Approx(fit2.kernel_lambda0(x)).epsilon(1e-9));
}

TEST_CASE("martingale residuals satisfy both estimating identities") {
  const auto spec = ScenarioSpec::by_name("scenario2");
  const Dataset data = gen_dataset(spec, 300, 10, PolicySpec::uniform(2), 61);
  const auto fit = fit_renewal(data, CovariateBuilder::scheme1(1), RenewalOptions{});

  double sum = 0.0;
  Eigen::VectorXd zsum = Eigen::VectorXd::Zero(fit.q());
  for (long t = 0; t < fit.n_transitions(); ++t) {
    sum += fit.mart_residual_at_tau(t);
    zsum += fit.score_residual(t);
  }
  CHECK(std::abs(sum) < 1e-8);
  CHECK(zsum.lpNorm<Eigen::Infinity>() < 1e-8);

  // single-event shape: the smallest gap's residual is 1 - Lambda0(X) when
  // beta = 0; verified against raw exponential data
  Rng rng(67);
  std::vector<double> gaps;
  for (int i = 0; i < 50; ++i) gaps.push_back(rng.exponential(1.0));
  const auto plain = fit_renewal_raw(gaps, Eigen::MatrixXd::Zero(50, 1), opts_with_tau(20.0));
  long smallest = 0;
  for (long t = 1; t < 50; ++t)
    if (gaps[t] < gaps[smallest]) smallest = t;
  CHECK(plain.mart_residual_at_tau(smallest) ==
        doctest::Approx(1.0 - plain.Lambda0(gaps[smallest])).epsilon(1e-12));
}

TEST_CASE("information matrix: constant covariate gives zero, oracle matches sum") {
  // q = 1 Bernoulli covariate on a small hand dataset: the information must
  // equal the direct per-event summation of the centered second moments
  std::vector<double> gaps = {0.2, 0.5, 0.9, 1.4, 2.0, 2.6};
  Eigen::MatrixXd Z(6, 1);
  Z << 1, 0, 1, 1, 0, 1;
  const auto fit = fit_renewal_raw(gaps, Z, opts_with_tau(3.0));
  const double b = fit.beta()[0];
  double direct = 0.0;
  for (int e = 0; e < 6; ++e) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int t = 0; t < 6; ++t) {
      if (gaps[t] < gaps[e]) continue;
      const double w = std::exp(b * Z(t, 0));
      s0 += w;
      s1 += w * Z(t, 0);
      s2 += w * Z(t, 0) * Z(t, 0);
    }
    direct += s2 / s0 - (s1 / s0) * (s1 / s0);
  }
  direct /= 6.0;
  CHECK(fit.information()(0, 0) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("inverse information calibrates the sampling variance of the fit") {
  const auto spec = ScenarioSpec::by_name("scenario2");
  const int reps = 200;
  std::vector<Eigen::VectorXd> betas;
  Eigen::VectorXd se_acc;
  for (int r = 0; r < reps; ++r) {
    const Dataset data = gen_dataset(spec, 1000, 10, PolicySpec::uniform(2), 1000 + r);
    const auto fit = fit_renewal(data, CovariateBuilder::scheme2(1), RenewalOptions{});
    betas.push_back(fit.beta());
    const Eigen::VectorXd se = fit.beta_standard_errors();
    if (r == 0)
      se_acc = se.cwiseProduct(se);
    else
      se_acc += se.cwiseProduct(se);
  }
  const int q = static_cast<int>(betas[0].size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(q);
  for (const auto& b : betas) mean += b;
  mean /= reps;
  for (int j = 0; j < q; ++j) {
    double var = 0.0;
    for (const auto& b : betas) var += (b[j] - mean[j]) * (b[j] - mean[j]);
    var /= (reps - 1);
    const double model_var = se_acc[j] / reps;
    CHECK(model_var / var > 0.75);
    CHECK(model_var / var < 1.25);
  }
}
