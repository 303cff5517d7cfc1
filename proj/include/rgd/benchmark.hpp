#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rgd/sampler.hpp"
#include "rgd/types.hpp"

namespace rgd {

// Analytic black-box task. The oracle is deterministic; y_max_true is the
// analytic optimum used as the normalization ceiling.
struct Task {
  std::string name;
  int dim = 0;
  std::function<double(const VectorXd&)> oracle;
  double box_lo = -2.0;
  double box_hi = 2.0;
  double y_max_true = 0.0;
};

// Chained negative Rosenbrock: -(sum over i of (1-x_i)^2 + 100 (x_{i+1} - x_i^2)^2).
// The d=2 case reduces to the classic two-variable form; the optimum is 0 at
// the all-ones design.
double oracle_rosenbrock(const VectorXd& x);
Task make_rosenbrock_task(int dim, double box_lo = -2.0, double box_hi = 2.0);

// y mapped so the floor is 0 and the analytic optimum is 1; values outside
// the pool range may leave [0, 1] (not clipped).
inline double normalize(double y, double y_min_ref, double y_max_true) {
  if (!(y_min_ref < y_max_true)) throw ConfigError("degenerate normalization range");
  return (y - y_min_ref) / (y_max_true - y_min_ref);
}

// Offline dataset drawn from the low-scoring part of a uniform pool: the pool
// minimum fixes the normalization floor, and only designs whose normalized
// score stays at or below `cap` are kept (first N in generation order).
struct OfflineDataset {
  std::string task_name;
  MatrixXd designs;  // d x N, raw design space
  VectorXd scores;   // raw oracle scores
  VectorXd x_mean, x_std;
  double y_mean = 0.0, y_std = 1.0;
  double y_min_ref = 0.0, y_max_true = 0.0;
  double cap = 1.0;
  std::uint64_t seed = 0;
  std::int64_t pool_size = 0;
  double box_lo = 0.0, box_hi = 0.0;

  Eigen::Index size() const { return designs.cols(); }
  int dim() const { return static_cast<int>(designs.rows()); }
  double y_max() const { return scores.maxCoeff(); }

  VectorXd to_model(const VectorXd& x_raw) const {
    return (x_raw - x_mean).cwiseQuotient(x_std);
  }
  VectorXd to_raw(const VectorXd& x_model) const {
    return x_mean + x_model.cwiseProduct(x_std);
  }
  MatrixXd designs_model() const {
    return (designs.colwise() - x_mean).array().colwise() / x_std.array();
  }
};

OfflineDataset generate_dataset(const Task& task, Eigen::Index n, double cap,
                                std::int64_t pool_size, std::uint64_t seed);

void save_dataset(const OfflineDataset& ds, const std::filesystem::path& dir);
OfflineDataset load_dataset(const std::filesystem::path& dir);

// Oracle evaluation of a candidate batch: max (100th percentile) and median
// (50th) of the normalized scores over exactly `budget` candidates.
struct EvalReport {
  int count = 0;
  VectorXd oracle_scores;
  VectorXd normalized;
  double max_normalized = 0.0;
  double median_normalized = 0.0;
  double max_raw = 0.0;
  double median_raw = 0.0;
  std::uint64_t seed = 0;
  std::string config_digest;
};

EvalReport evaluate(std::vector<Candidate>& candidates, const Task& task,
                    const OfflineDataset& ds, int budget);

}  // namespace rgd
