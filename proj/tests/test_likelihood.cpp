#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rgd/likelihood.hpp"
#include "rgd/rng.hpp"
#include "rgd/score_net.hpp"
#include "stubs.hpp"

using namespace rgd;

TEST_CASE("flow ODE with the fixed-point score reproduces the standard normal") {
  DiffusionSchedule sched;
  const auto model = stubs::GaussianDataScore::std_normal(sched, 4);
  FlowOdeConfig cfg;
  cfg.ode_steps = 200;
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    const VectorXd x = rng.normal_vec(4);
    const double got = log_density(model, sched, x, std::nullopt, cfg);
    CHECK(std::abs(got - oracle::log_std_normal(x)) < 1e-2);
  }
}

TEST_CASE("flow ODE matches the closed-form Gaussian with variance 0.25") {
  DiffusionSchedule sched;
  const stubs::GaussianDataScore model(sched, VectorXd::Zero(4), VectorXd::Constant(4, 0.25));
  FlowOdeConfig cfg;
  cfg.ode_steps = 200;
  Rng rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    const VectorXd x = 0.5 * rng.normal_vec(4);
    // model density at t_eps: variance 0.25*mu^2 + sigma^2
    const double v = model.vt(0, sched.t_eps);
    double want = 0.0;
    for (int i = 0; i < 4; ++i) want += oracle::log_normal_pdf(x[i], 0.0, v);
    const double got = log_density(model, sched, x, std::nullopt, cfg);
    CHECK(std::abs(got - want) < 2e-2);
  }
}

TEST_CASE("log-density is additive over independent coordinate blocks") {
  DiffusionSchedule sched;
  VectorXd c2(4);
  c2 << 0.25, 0.25, 1.0, 2.25;
  VectorXd m0(4);
  m0 << 0.3, -0.2, 0.0, 0.7;
  const stubs::GaussianDataScore joint(sched, m0, c2);
  const stubs::GaussianDataScore block_a(sched, m0.head(2), c2.head(2));
  const stubs::GaussianDataScore block_b(sched, m0.tail(2), c2.tail(2));
  FlowOdeConfig cfg;
  cfg.ode_steps = 100;
  Rng rng(5);
  const VectorXd x = rng.normal_vec(4);
  const double whole = log_density(joint, sched, x, std::nullopt, cfg);
  const double parts = log_density(block_a, sched, VectorXd(x.head(2)), std::nullopt, cfg) +
                       log_density(block_b, sched, VectorXd(x.tail(2)), std::nullopt, cfg);
  CHECK(std::abs(whole - parts) < 1e-3);
}

TEST_CASE("halving the step size shows second-order convergence") {
  DiffusionSchedule sched;
  const stubs::GaussianDataScore model(sched, VectorXd::Zero(2), VectorXd::Constant(2, 0.25));
  VectorXd x(2);
  x << 0.4, -0.9;
  auto value = [&](int n) {
    FlowOdeConfig cfg;
    cfg.ode_steps = n;
    return log_density(model, sched, x, std::nullopt, cfg);
  };
  const double l1 = value(50), l2 = value(100), l3 = value(200);
  const double ratio = (l1 - l2) / (l2 - l3);
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}

TEST_CASE("kde: single-sample fallback, symmetry, unit mass") {
  const KdeModel single = make_kde(VectorXd::Constant(1, 0.7), 0.5);
  CHECK(kde_logpdf(single, 1.1) ==
        doctest::Approx(oracle::log_normal_pdf(1.1, 0.7, 0.25)).epsilon(1e-12));

  VectorXd pm(2);
  pm << -1.0, 1.0;
  const KdeModel sym = make_kde(pm, 0.8);
  CHECK(kde_logpdf(sym, 0.0) ==
        doctest::Approx(oracle::log_normal_pdf(0.0, 1.0, 0.64)).epsilon(1e-12));

  Rng rng(6);
  VectorXd ys(200);
  for (int i = 0; i < 200; ++i) ys[i] = 2.0 + 1.5 * rng.normal();
  const KdeModel kde = make_kde(ys);
  CHECK(kde.bandwidth > 0.0);
  const double lo = ys.minCoeff() - 6.0 * (1.5 + kde.bandwidth);
  const double hi = ys.maxCoeff() + 6.0 * (1.5 + kde.bandwidth);
  const double mass =
      oracle::trapezoid([&](double y) { return std::exp(kde_logpdf(kde, y)); }, lo, hi, 4000);
  CHECK(mass > 0.99);
  CHECK(mass < 1.01);

  CHECK_THROWS_AS(make_kde(VectorXd::Constant(1, 0.0)), ConfigError);
}

TEST_CASE("hutchinson divergence agrees with exact within 3 standard errors") {
  DiffusionSchedule sched;
  VectorXd c2(8);
  c2 << 0.25, 0.5, 1.0, 1.5, 0.75, 2.0, 0.4, 1.2;
  const stubs::GaussianDataScore model(sched, VectorXd::Zero(8), c2);
  Rng rng(7);
  const VectorXd x = rng.normal_vec(8);

  FlowOdeConfig exact;
  exact.ode_steps = 60;
  const double truth = log_density(model, sched, x, std::nullopt, exact);

  const int reps = 16;
  VectorXd vals(reps);
  for (int r = 0; r < reps; ++r) {
    FlowOdeConfig hcfg;
    hcfg.ode_steps = 60;
    hcfg.divergence = FlowOdeConfig::Divergence::kHutchinson;
    hcfg.probes = 64;
    hcfg.probe_seed = 1000 + r;
    vals[r] = log_density(model, sched, x, std::nullopt, hcfg);
  }
  const double mean = vals.mean();
  const double se = std::sqrt((vals.array() - mean).square().sum() / (reps - 1)) /
                    std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(mean - truth) < 3.0 * std::max(se, 1e-12));
}

TEST_CASE("posterior equals the prior when conditioning is uninformative") {
  DiffusionSchedule sched;
  stubs::LinearGaussianScore model;
  model.sched = sched;
  model.a = 0.0;  // condition carries no information
  Rng rng(8);
  VectorXd ys(64);
  for (int i = 0; i < 64; ++i) ys[i] = rng.normal();
  const KdeModel kde = make_kde(ys);
  FlowOdeConfig cfg;
  cfg.ode_steps = 50;
  PosteriorRecord rec{VectorXd::Constant(1, 0.3), std::nullopt, 0};
  for (double y : {-1.0, 0.2, 1.7}) {
    const double post = posterior_logpdf(model, sched, kde, rec, y, cfg);
    CHECK(post == doctest::Approx(kde_logpdf(kde, y)).epsilon(1e-9));
  }
}

TEST_CASE("posterior record caches the unconditional solve") {
  DiffusionSchedule sched;
  stubs::LinearGaussianScore model;
  model.sched = sched;
  const KdeModel kde = make_kde(VectorXd::Zero(1), 1.0);
  FlowOdeConfig cfg;
  cfg.ode_steps = 50;
  PosteriorRecord rec{VectorXd::Constant(1, 0.5), std::nullopt, 0};
  const double a = posterior_logpdf(model, sched, kde, rec, 0.4, cfg);
  const double b = posterior_logpdf(model, sched, kde, rec, -0.8, cfg);
  const double a2 = posterior_logpdf(model, sched, kde, rec, 0.4, cfg);
  CHECK(rec.uncond_solves == 1);
  CHECK(a == a2);  // pure given the cached record
  // decomposition identity
  const double manual = log_density(model, sched, rec.x_hat, 0.4, cfg) + kde_logpdf(kde, 0.4) -
                        *rec.log_px;
  CHECK(a == doctest::Approx(manual).epsilon(1e-12));
  CHECK(a != b);
}

TEST_CASE("linear-Gaussian posterior matches the conjugate closed form") {
  DiffusionSchedule sched;
  stubs::LinearGaussianScore model;
  model.sched = sched;
  model.a = 1.0;
  model.s2 = 0.25;
  model.my = 0.0;
  model.sy2 = 1.0;
  // exact Gaussian prior via the single-sample kde
  const KdeModel prior = make_kde(VectorXd::Zero(1), 1.0);
  FlowOdeConfig cfg;
  cfg.ode_steps = 100;

  const double xhat = 1.2;
  PosteriorRecord rec{VectorXd::Constant(1, xhat), std::nullopt, 0};

  // grid moments of exp(posterior)
  const int n = 160;
  const double lo = -4.0, hi = 4.0;
  const double dy = (hi - lo) / n;
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double y = lo + i * dy;
    const double p = std::exp(posterior_logpdf(model, sched, prior, rec, y, cfg));
    z += p * dy;
    m1 += y * p * dy;
    m2 += y * y * p * dy;
  }
  const double mean = m1 / z;
  const double var = m2 / z - mean * mean;
  // x | y ~ N(y, 0.25), y ~ N(0, 1)  =>  y | x ~ N(0.8 x, 0.2)
  CHECK(std::abs(mean - 0.8 * xhat) < 0.05 * std::abs(0.8 * xhat));
  CHECK(std::abs(var - 0.2) < 0.05 * 0.2);
  CHECK(std::abs(z - 1.0) < 0.05);
}

TEST_CASE("posterior mass stays near one for a trained model") {
  // 1-d synthetic task: x0 = y with y ~ N(0, 1); train the score net, then
  // integrate exp(log posterior) over a fine y grid.
  Rng rng(11);
  const int n = 512;
  MatrixXd X(1, n);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = rng.normal();
    X(0, i) = y[i];
  }
  DiffusionSchedule sched;
  ScoreNet net(1, 64, 3, 16, sched, y.mean(),
               std::sqrt((y.array() - y.mean()).square().mean()), 19);
  TrainBatchSpec spec;
  spec.steps = 6000;
  spec.batch = 128;
  spec.p_drop = 0.3;
  spec.lr_decay_horizon = 6000;
  spec.lr_final_frac = 0.05;
  net.train(X, y, spec, 23);

  const KdeModel kde = make_kde(y);
  FlowOdeConfig cfg;
  cfg.ode_steps = 100;
  PosteriorRecord rec{VectorXd::Constant(1, 0.6), std::nullopt, 0};
  const int grid = 120;
  const double lo = -4.5, hi = 4.5;
  const double dy = (hi - lo) / grid;
  double mass = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double yy = lo + i * dy;
    mass += std::exp(posterior_logpdf(net, sched, kde, rec, yy, cfg)) * dy;
  }
  CHECK(mass > 0.9);
  CHECK(mass < 1.1);
}
