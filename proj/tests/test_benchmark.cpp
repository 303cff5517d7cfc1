#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "rgd/benchmark.hpp"
#include "rgd/io.hpp"
#include "rgd/rng.hpp"

using namespace rgd;

TEST_CASE("rosenbrock oracle hand values and purity") {
  VectorXd ones2 = VectorXd::Ones(2);
  CHECK(oracle_rosenbrock(ones2) == 0.0);
  CHECK(oracle_rosenbrock(VectorXd::Ones(60)) == 0.0);

  VectorXd z(2);
  z << 0.0, 0.0;
  CHECK(oracle_rosenbrock(z) == -1.0);
  VectorXd p(2);
  p << 2.0, 1.0;
  CHECK(oracle_rosenbrock(p) == -901.0);

  Rng rng(1);
  const VectorXd x = rng.normal_vec(7);
  CHECK(oracle_rosenbrock(x) == oracle_rosenbrock(x));  // bit-identical
}

TEST_CASE("normalize endpoints, midpoint, and degenerate range") {
  CHECK(normalize(-10.0, -10.0, 0.0) == 0.0);
  CHECK(normalize(0.0, -10.0, 0.0) == 1.0);
  CHECK(normalize(-5.0, -10.0, 0.0) == doctest::Approx(0.5));
  CHECK(normalize(5.0, -10.0, 0.0) == doctest::Approx(1.5));  // not clipped
  CHECK_THROWS_AS(normalize(0.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("dataset generation: cap filter, determinism, stats") {
  const Task task = make_rosenbrock_task(3);
  const OfflineDataset ds = generate_dataset(task, 200, 0.9, 2000, 42);
  CHECK(ds.size() == 200);
  double max_norm = -1.0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    CHECK(ds.scores[i] == task.oracle(ds.designs.col(i)));
    max_norm = std::max(max_norm, normalize(ds.scores[i], ds.y_min_ref, ds.y_max_true));
  }
  CHECK(max_norm <= 0.9 + 1e-12);
  CHECK(ds.y_min_ref < ds.y_max_true);

  // identical seeds give identical bytes on disk
  const auto dir1 = std::filesystem::temp_directory_path() / "rgd_ds_a";
  const auto dir2 = std::filesystem::temp_directory_path() / "rgd_ds_b";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  save_dataset(ds, dir1);
  save_dataset(generate_dataset(task, 200, 0.9, 2000, 42), dir2);
  CHECK(read_text_file(dir1 / "dataset.bin") == read_text_file(dir2 / "dataset.bin"));

  const OfflineDataset other = generate_dataset(task, 200, 0.9, 2000, 43);
  CHECK((other.designs - ds.designs).norm() != 0.0);

  // cap = 1.0 keeps the first N pool points verbatim: regenerating with a
  // pool exactly N long must succeed and match the larger pool's prefix
  const OfflineDataset all = generate_dataset(task, 50, 1.0, 50, 7);
  const OfflineDataset wide = generate_dataset(task, 50, 1.0, 500, 7);
  CHECK((all.designs - wide.designs).norm() == 0.0);

  CHECK_THROWS_WITH_AS(generate_dataset(task, 1000, 0.05, 2000, 1),
                       doctest::Contains("enlarge the pool"), ConfigError);
}

TEST_CASE("dataset save/load round-trips bit-exact") {
  const Task task = make_rosenbrock_task(2);
  const OfflineDataset ds = generate_dataset(task, 64, 0.8, 400, 5);
  const auto dir = std::filesystem::temp_directory_path() / "rgd_ds_rt";
  std::filesystem::remove_all(dir);
  save_dataset(ds, dir);
  const OfflineDataset back = load_dataset(dir);
  CHECK((back.designs - ds.designs).norm() == 0.0);
  CHECK((back.scores - ds.scores).norm() == 0.0);
  CHECK(back.y_min_ref == ds.y_min_ref);
  CHECK(back.cap == ds.cap);
  CHECK(back.y_std == ds.y_std);
  // model-space round trip
  const VectorXd x = ds.designs.col(3);
  CHECK((back.to_raw(back.to_model(x)) - x).cwiseAbs().maxCoeff() < 1e-12);
}

namespace {

// identity-score task: oracle(x) = x[0], so raw designs map straight to scores
Task identity_task() {
  Task t;
  t.name = "identity";
  t.dim = 1;
  t.oracle = [](const VectorXd& x) { return x[0]; };
  t.box_lo = -10.0;
  t.box_hi = 0.0;
  t.y_max_true = 0.0;
  return t;
}

OfflineDataset identity_dataset() {
  OfflineDataset ds;
  ds.task_name = "identity";
  ds.designs.resize(1, 2);
  ds.designs << -10.0, -5.0;
  ds.scores.resize(2);
  ds.scores << -10.0, -5.0;
  ds.x_mean = VectorXd::Zero(1);
  ds.x_std = VectorXd::Ones(1);
  ds.y_mean = -7.5;
  ds.y_std = 2.5;
  ds.y_min_ref = -10.0;
  ds.y_max_true = 0.0;
  ds.cap = 1.0;
  return ds;
}

Candidate candidate_at(double v) {
  Candidate c;
  c.x0_model = VectorXd::Constant(1, v);
  return c;
}

}  // namespace

TEST_CASE("evaluate: optimum candidate, arithmetic case, budget checks") {
  const Task rosen = make_rosenbrock_task(2);
  OfflineDataset ds2;
  ds2.designs.resize(2, 1);
  ds2.designs.col(0) << 0.0, 0.0;
  ds2.scores = VectorXd::Constant(1, -1.0);
  ds2.x_mean = VectorXd::Zero(2);
  ds2.x_std = VectorXd::Ones(2);
  ds2.y_min_ref = -100.0;
  ds2.y_max_true = 0.0;
  std::vector<Candidate> best;
  Candidate opt;
  opt.x0_model = VectorXd::Ones(2);
  best.push_back(opt);
  const EvalReport r1 = evaluate(best, rosen, ds2, 1);
  CHECK(r1.max_normalized == doctest::Approx(1.0));
  CHECK(r1.median_normalized == doctest::Approx(1.0));
  CHECK(best[0].oracle_score.has_value());
  CHECK(*best[0].oracle_score == 0.0);

  const Task ident = identity_task();
  const OfflineDataset ds = identity_dataset();
  std::vector<Candidate> two = {candidate_at(-10.0), candidate_at(0.0)};
  const EvalReport r2 = evaluate(two, ident, ds, 2);
  CHECK(r2.max_normalized == doctest::Approx(1.0));
  CHECK(r2.median_normalized == doctest::Approx(0.5));

  std::vector<Candidate> wrong = {candidate_at(0.0)};
  CHECK_THROWS_AS(evaluate(wrong, ident, ds, 2), ConfigError);
}

TEST_CASE("candidates drawn from the dataset stay under the cap") {
  const Task task = make_rosenbrock_task(2);
  const OfflineDataset ds = generate_dataset(task, 32, 0.7, 400, 9);
  std::vector<Candidate> cands;
  for (int i = 0; i < 32; ++i) {
    Candidate c;
    c.x0_model = ds.to_model(ds.designs.col(i));
    cands.push_back(c);
  }
  std::vector<Candidate> copy = cands;
  const EvalReport rep = evaluate(copy, task, ds, 32);
  CHECK(rep.max_normalized <= 0.7 + 1e-9);
}

TEST_CASE("normalization preserves the identity of the best candidate") {
  Rng rng(17);
  VectorXd raw(9);
  for (int i = 0; i < 9; ++i) raw[i] = -50.0 * rng.uniform();
  Eigen::Index best_raw, best_norm;
  raw.maxCoeff(&best_raw);
  VectorXd norm(9);
  for (int i = 0; i < 9; ++i) norm[i] = normalize(raw[i], -50.0, 0.0);
  norm.maxCoeff(&best_norm);
  CHECK(best_raw == best_norm);
}
