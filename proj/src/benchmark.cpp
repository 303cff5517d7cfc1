#include "rgd/benchmark.hpp"

#include <algorithm>

#include <json.hpp>

#include "rgd/io.hpp"
#include "rgd/rng.hpp"

namespace rgd {

double oracle_rosenbrock(const VectorXd& x) {
  if (x.size() < 2) throw ConfigError("rosenbrock needs dimension >= 2");
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = 1.0 - x[i];
    const double b = x[i + 1] - x[i] * x[i];
    acc += a * a + 100.0 * b * b;
  }
  return -acc;
}

Task make_rosenbrock_task(int dim, double box_lo, double box_hi) {
  if (dim < 2) throw ConfigError("rosenbrock needs dimension >= 2");
  Task t;
  t.name = "rosenbrock";
  t.dim = dim;
  t.oracle = oracle_rosenbrock;
  t.box_lo = box_lo;
  t.box_hi = box_hi;
  t.y_max_true = 0.0;
  return t;
}

OfflineDataset generate_dataset(const Task& task, Eigen::Index n, double cap,
                                std::int64_t pool_size, std::uint64_t seed) {
  if (!(cap > 0.0 && cap <= 1.0)) throw ConfigError("cap must lie in (0, 1]");
  if (pool_size < n) throw ConfigError("pool must be at least the dataset size");

  Rng rng(fold_seed({seed, kStreamPool}));
  MatrixXd pool(task.dim, pool_size);
  VectorXd pool_y(pool_size);
  for (std::int64_t i = 0; i < pool_size; ++i) {
    for (int j = 0; j < task.dim; ++j) pool(j, i) = rng.uniform_in(task.box_lo, task.box_hi);
    pool_y[i] = task.oracle(pool.col(i));
  }
  const double y_min_ref = pool_y.minCoeff();
  if (!(y_min_ref < task.y_max_true))
    throw ConfigError("pool minimum does not sit below the analytic optimum");

  OfflineDataset ds;
  ds.task_name = task.name;
  ds.designs.resize(task.dim, n);
  ds.scores.resize(n);
  Eigen::Index kept = 0;
  for (std::int64_t i = 0; i < pool_size && kept < n; ++i) {
    if (normalize(pool_y[i], y_min_ref, task.y_max_true) <= cap) {
      ds.designs.col(kept) = pool.col(i);
      ds.scores[kept] = pool_y[i];
      ++kept;
    }
  }
  if (kept < n)
    throw ConfigError("only " + std::to_string(kept) + " of " + std::to_string(n) +
                      " designs qualified under the cap; enlarge the pool");

  ds.x_mean = ds.designs.rowwise().mean();
  ds.x_std.resize(task.dim);
  for (int j = 0; j < task.dim; ++j) {
    const double var = (ds.designs.row(j).array() - ds.x_mean[j]).square().mean();
    ds.x_std[j] = std::sqrt(var);
    if (!(ds.x_std[j] > 1e-12)) ds.x_std[j] = 1.0;
  }
  ds.y_mean = ds.scores.mean();
  const double y_var = (ds.scores.array() - ds.y_mean).square().mean();
  ds.y_std = y_var > 1e-24 ? std::sqrt(y_var) : 1.0;
  ds.y_min_ref = y_min_ref;
  ds.y_max_true = task.y_max_true;
  ds.cap = cap;
  ds.seed = seed;
  ds.pool_size = pool_size;
  ds.box_lo = task.box_lo;
  ds.box_hi = task.box_hi;
  return ds;
}

void save_dataset(const OfflineDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  // row-major per design, then the score block
  std::vector<double> raw;
  raw.reserve(static_cast<std::size_t>(ds.size() * (ds.dim() + 1)));
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    for (int j = 0; j < ds.dim(); ++j) raw.push_back(ds.designs(j, i));
  for (Eigen::Index i = 0; i < ds.size(); ++i) raw.push_back(ds.scores[i]);
  write_f64_le(dir / "dataset.bin", raw.data(), raw.size());

  nlohmann::json side;
  side["schema_version"] = 1;
  side["task"] = ds.task_name;
  side["dim"] = ds.dim();
  side["n"] = ds.size();
  side["cap"] = ds.cap;
  side["seed"] = ds.seed;
  side["pool_size"] = ds.pool_size;
  side["box_lo"] = ds.box_lo;
  side["box_hi"] = ds.box_hi;
  side["y_min_ref"] = ds.y_min_ref;
  side["y_max_true"] = ds.y_max_true;
  side["x_mean"] = std::vector<double>(ds.x_mean.data(), ds.x_mean.data() + ds.x_mean.size());
  side["x_std"] = std::vector<double>(ds.x_std.data(), ds.x_std.data() + ds.x_std.size());
  side["y_mean"] = ds.y_mean;
  side["y_std"] = ds.y_std;
  side["bin_checksum"] = file_checksum(dir / "dataset.bin");
  write_text_file(dir / "dataset.json", side.dump(2) + "\n");
}

OfflineDataset load_dataset(const std::filesystem::path& dir) {
  const auto side = nlohmann::json::parse(read_text_file(dir / "dataset.json"));
  OfflineDataset ds;
  ds.task_name = side.at("task").get<std::string>();
  const int dim = side.at("dim").get<int>();
  const Eigen::Index n = side.at("n").get<Eigen::Index>();
  const auto raw = read_f64_le(dir / "dataset.bin");
  if (static_cast<Eigen::Index>(raw.size()) != n * (dim + 1))
    throw ConfigError("dataset.bin does not match its sidecar");
  ds.designs.resize(dim, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j)
      ds.designs(j, i) = raw[static_cast<std::size_t>(i) * dim + j];
  ds.scores.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    ds.scores[i] = raw[static_cast<std::size_t>(n) * dim + static_cast<std::size_t>(i)];
  const auto xm = side.at("x_mean").get<std::vector<double>>();
  const auto xs = side.at("x_std").get<std::vector<double>>();
  ds.x_mean = Eigen::Map<const VectorXd>(xm.data(), static_cast<Eigen::Index>(xm.size()));
  ds.x_std = Eigen::Map<const VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  ds.y_mean = side.at("y_mean").get<double>();
  ds.y_std = side.at("y_std").get<double>();
  ds.y_min_ref = side.at("y_min_ref").get<double>();
  ds.y_max_true = side.at("y_max_true").get<double>();
  ds.cap = side.at("cap").get<double>();
  ds.seed = side.at("seed").get<std::uint64_t>();
  ds.pool_size = side.at("pool_size").get<std::int64_t>();
  ds.box_lo = side.at("box_lo").get<double>();
  ds.box_hi = side.at("box_hi").get<double>();
  return ds;
}

namespace {
double median_of(VectorXd v) {
  std::sort(v.data(), v.data() + v.size());
  const Eigen::Index n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

EvalReport evaluate(std::vector<Candidate>& candidates, const Task& task,
                    const OfflineDataset& ds, int budget) {
  if (static_cast<int>(candidates.size()) != budget)
    throw ConfigError("candidate count " + std::to_string(candidates.size()) +
                      " does not match the evaluation budget " + std::to_string(budget));
  EvalReport rep;
  rep.count = budget;
  rep.oracle_scores.resize(budget);
  rep.normalized.resize(budget);
  for (int i = 0; i < budget; ++i) {
    const VectorXd x_raw = ds.to_raw(candidates[static_cast<std::size_t>(i)].x0_model);
    const double y = task.oracle(x_raw);
    candidates[static_cast<std::size_t>(i)].oracle_score = y;
    rep.oracle_scores[i] = y;
    rep.normalized[i] = normalize(y, ds.y_min_ref, ds.y_max_true);
  }
  rep.max_raw = rep.oracle_scores.maxCoeff();
  rep.median_raw = median_of(rep.oracle_scores);
  rep.max_normalized = rep.normalized.maxCoeff();
  rep.median_normalized = median_of(rep.normalized);
  return rep;
}

}  // namespace rgd
