#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "rgd/adam.hpp"
#include "rgd/checkpoint.hpp"
#include "rgd/io.hpp"
#include "rgd/mlp.hpp"
#include "rgd/rng.hpp"

using namespace rgd;

namespace {

Mlp linear1(double w, double b) {
  Mlp net({1, 1}, Activation::kSilu, 0);
  net.mutable_weight(0)(0, 0) = w;
  net.mutable_bias(0)[0] = b;
  return net;
}

}  // namespace

TEST_CASE("dual arithmetic obeys product and chain rules") {
  auto f = [](auto x) {
    using std::exp;
    using std::log;
    using std::sqrt;
    return x * x + exp(-x) / (x + decltype(x)(2.0)) + log(x) * sqrt(x);
  };
  for (double x0 : {0.3, 1.0, 2.7}) {
    const Dual y = f(Dual(x0, 1.0));
    const double fd = oracle::fd_scalar([&](double x) { return f(x); }, x0, 1e-6);
    CHECK(y.value == doctest::Approx(f(x0)));
    CHECK(y.tangent == doctest::Approx(fd).epsilon(1e-7));
  }
  // product rule exactly
  const Dual a(3.0, 0.5), b(-2.0, 1.25);
  CHECK((a * b).tangent == 0.5 * -2.0 + 3.0 * 1.25);
}

TEST_CASE("forward: affine arithmetic and degenerate nets") {
  const Mlp net = linear1(2.0, 1.0);
  VectorXd x(1);
  x << 3.0;
  CHECK(net(x)[0] == doctest::Approx(7.0));

  Mlp zeros({3, 2}, Activation::kSilu, 0);
  zeros.mutable_weight(0).setZero();
  zeros.mutable_bias(0) << -1.0, 4.0;
  VectorXd in(3);
  in << 5.0, -2.0, 0.25;
  const VectorXd out = zeros(in);
  CHECK(out[0] == doctest::Approx(-1.0));
  CHECK(out[1] == doctest::Approx(4.0));
}

TEST_CASE("forward matches an independently hand-rolled reference") {
  const Mlp net({4, 8, 6, 3}, Activation::kSilu, 42);
  std::vector<Eigen::MatrixXd> ws;
  std::vector<Eigen::VectorXd> bs;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    ws.emplace_back(net.weight(l));
    bs.emplace_back(net.bias(l));
  }
  Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    const VectorXd x = rng.normal_vec(4);
    const VectorXd want = oracle::reference_mlp_eval(ws, bs, x);
    const VectorXd got = net(x);
    CHECK(oracle::max_rel_error(got, want) < 1e-12);
  }
}

TEST_CASE("forward is homogeneous for bias-free linear layers") {
  Mlp net({3, 2}, Activation::kSilu, 5);
  net.mutable_bias(0).setZero();
  Rng rng(11);
  const VectorXd x = rng.normal_vec(3);
  const VectorXd y1 = net(VectorXd(3.5 * x));
  const VectorXd y2 = 3.5 * net(x);
  CHECK(oracle::max_rel_error(y1, y2) < 1e-12);
}

TEST_CASE("backward: linear adjoint and zero cotangent") {
  Mlp net({3, 2}, Activation::kSilu, 3);  // single layer => identity output act
  Rng rng(1);
  const VectorXd x = rng.normal_vec(3);
  VectorXd u(2);
  u << 0.7, -1.3;
  VectorXd pg;
  const VectorXd ig = net.backward(x, u, pg);
  const VectorXd want = net.weight(0).transpose() * u;
  CHECK(oracle::max_rel_error(ig, want) < 1e-12);

  VectorXd pg0;
  const VectorXd ig0 = net.backward(x, VectorXd::Zero(2), pg0);
  CHECK(ig0.norm() == 0.0);
  CHECK(pg0.norm() == 0.0);
}

TEST_CASE("backward gradients match central finite differences") {
  const Mlp net({5, 16, 16, 4}, Activation::kSilu, 99);
  Rng rng(2);
  const VectorXd x = rng.normal_vec(5);
  const VectorXd u = rng.normal_vec(4);

  VectorXd pg;
  const VectorXd ig = net.backward(x, u, pg);

  // input gradient
  auto fx = [&](const VectorXd& xx) { return u.dot(net(xx)); };
  CHECK(oracle::max_rel_error(ig, oracle::fd_gradient(fx, x)) < 1e-5);

  // parameter gradient (central differences through a parameter copy)
  Mlp probe = net;
  auto fparam = [&](const VectorXd& p) {
    probe.set_params(p);
    return u.dot(probe(x));
  };
  const VectorXd fd = oracle::fd_gradient(fparam, net.params());
  CHECK(oracle::max_rel_error(pg, fd) < 1e-5);
}

TEST_CASE("jvp: linear tangent map, zero tangent, finite differences") {
  Mlp net({3, 2}, Activation::kSilu, 12);
  Rng rng(3);
  const VectorXd x = rng.normal_vec(3);
  const VectorXd v = rng.normal_vec(3);
  const auto [val, tan] = net.jvp(x, v);
  CHECK(oracle::max_rel_error(tan, VectorXd(net.weight(0) * v)) < 1e-12);
  const auto [val0, tan0] = net.jvp(x, VectorXd::Zero(3));
  CHECK(tan0.norm() == 0.0);

  const Mlp deep({4, 12, 12, 3}, Activation::kSilu, 77);
  const VectorXd xd = rng.normal_vec(4);
  const VectorXd vd = rng.normal_vec(4);
  const auto [dv, dt] = deep.jvp(xd, vd);
  const VectorXd fd =
      oracle::fd_directional([&](const VectorXd& p) { return deep(p); }, xd, vd);
  CHECK(oracle::max_rel_error(dt, fd) < 1e-5);
}

TEST_CASE("jvp and backward are transpose-consistent") {
  const Mlp net({4, 10, 10, 3}, Activation::kSilu, 13);
  Rng rng(4);
  const VectorXd x = rng.normal_vec(4);
  const VectorXd v = rng.normal_vec(4);
  const auto [val, tan] = net.jvp(x, v);
  for (int i = 0; i < 3; ++i) {
    VectorXd e = VectorXd::Zero(3);
    e[i] = 1.0;
    VectorXd pg;
    const VectorXd ig = net.backward(x, e, pg);
    CHECK(std::abs(ig.dot(v) - tan[i]) < 1e-12 * std::max(1.0, std::abs(tan[i])));
  }
}

TEST_CASE("tangent_batch agrees with jvp column by column") {
  const Mlp net({4, 9, 5}, Activation::kSilu, 21);
  Rng rng(5);
  const VectorXd x = rng.normal_vec(4);
  Eigen::MatrixXd V(4, 3);
  for (int c = 0; c < 3; ++c) V.col(c) = rng.normal_vec(4);
  const auto [val, T] = net.tangent_batch(x, V);
  CHECK(oracle::max_rel_error(val, net(x)) < 1e-14);
  for (int c = 0; c < 3; ++c) {
    const auto [v1, t1] = net.jvp(x, V.col(c));
    CHECK(oracle::max_rel_error(T.col(c), t1) < 1e-12);
  }
}

TEST_CASE("batched forward/backward equal per-sample results") {
  const Mlp net({3, 8, 2}, Activation::kSilu, 31);
  Rng rng(6);
  Eigen::MatrixXd X(3, 4), U(2, 4);
  for (int c = 0; c < 4; ++c) {
    X.col(c) = rng.normal_vec(3);
    U.col(c) = rng.normal_vec(2);
  }
  Mlp::Cache cache;
  const Eigen::MatrixXd Y = net.forward_batch(X, cache);
  VectorXd pg_batch;
  const Eigen::MatrixXd IG = net.backward_batch(cache, U, pg_batch);

  VectorXd pg_sum = VectorXd::Zero(net.param_count());
  for (int c = 0; c < 4; ++c) {
    CHECK(oracle::max_rel_error(Y.col(c), net(X.col(c))) < 1e-12);
    VectorXd pg;
    const VectorXd ig = net.backward(X.col(c), U.col(c), pg);
    CHECK(oracle::max_rel_error(IG.col(c), ig) < 1e-10);
    pg_sum += pg;
  }
  CHECK(oracle::max_rel_error(pg_batch, pg_sum) < 1e-10);
}

TEST_CASE("adam: zero gradient, first-step magnitude, quadratic descent") {
  AdamConfig cfg;
  cfg.lr = 1e-3;
  VectorXd w(2);
  w << 1.0, -2.0;

  AdamState a0(2, cfg);
  VectorXd w0 = w;
  a0.step(w0, VectorXd::Zero(2));
  CHECK((w0 - w).norm() == 0.0);

  AdamState a1(2, cfg);
  VectorXd w1 = w;
  VectorXd g(2);
  g << 0.37, -41.0;
  a1.step(w1, g);
  // bias-corrected first step moves each coordinate by ~lr*sign(g)
  CHECK(w1[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
  CHECK(w1[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-6));

  AdamState a2(1, cfg);
  VectorXd ww(1);
  ww << 1.0;
  for (int i = 0; i < 2; ++i) {
    VectorXd grad(1);
    grad << ww[0];  // gradient of 0.5 w^2
    a2.step(ww, grad);
  }
  CHECK(std::abs(ww[0]) < 1.0);

  AdamState a3(1, cfg);
  VectorXd w3(1);
  w3 << 0.5;
  VectorXd bad(1);
  bad << std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(a3.step(w3, bad));
  CHECK(w3[0] == 0.5);
  CHECK(a3.skipped() == 1);
  CHECK(a3.steps() == 0);
}

TEST_CASE("adam state round-trips through serialize") {
  AdamState a(3, {});
  VectorXd w = VectorXd::Constant(3, 1.0);
  VectorXd g(3);
  g << 0.1, -0.2, 0.3;
  a.step(w, g);
  a.step(w, g);
  const AdamState b = AdamState::deserialize(a.serialize(), a.config());
  VectorXd w1 = w, w2 = w;
  AdamState a1 = a, b1 = b;
  a1.step(w1, g);
  b1.step(w2, g);
  CHECK((w1 - w2).norm() == 0.0);
}

TEST_CASE("mlp init is deterministic per seed") {
  const Mlp a({3, 5, 2}, Activation::kSilu, 123);
  const Mlp b({3, 5, 2}, Activation::kSilu, 123);
  const Mlp c({3, 5, 2}, Activation::kSilu, 124);
  CHECK((a.params() - b.params()).norm() == 0.0);
  CHECK((a.params() - c.params()).norm() != 0.0);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  const Mlp net({4, 7, 2}, Activation::kSilu, 9);
  const auto dir = std::filesystem::temp_directory_path() / "rgd_ckpt_test";
  std::filesystem::remove_all(dir);
  nlohmann::json hp = {{"lr", 1e-3}, {"steps", 10}};
  nlohmann::json extra = {{"note", "test"}};
  save_checkpoint(dir, net, "mlp", hp, extra);
  const auto loaded = load_checkpoint(dir);
  REQUIRE(loaded.net.param_count() == net.param_count());
  for (Eigen::Index i = 0; i < net.param_count(); ++i)
    CHECK(loaded.net.params()[i] == net.params()[i]);
  CHECK(loaded.manifest.at("kind") == "mlp");
  CHECK(loaded.manifest.at("hyperparameters").at("steps") == 10);
  // saving the loaded net reproduces identical bytes
  const auto dir2 = std::filesystem::temp_directory_path() / "rgd_ckpt_test2";
  std::filesystem::remove_all(dir2);
  save_checkpoint(dir2, loaded.net, "mlp", hp, extra);
  CHECK(rgd::read_text_file(dir / "weights.bin") == rgd::read_text_file(dir2 / "weights.bin"));
}

TEST_CASE("dimension mismatches are fatal configuration errors") {
  const Mlp net({3, 2}, Activation::kSilu, 1);
  VectorXd bad(4);
  bad.setZero();
  CHECK_THROWS_AS((void)net(bad), ConfigError);
  CHECK_THROWS_AS((void)net.jvp(VectorXd::Zero(3), VectorXd::Zero(2)), ConfigError);
}
