#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "rgd/adam.hpp"
#include "rgd/mlp.hpp"
#include "rgd/schedule.hpp"

namespace rgd {

struct TrainBatchSpec {
  int batch = 128;
  std::int64_t steps = 100000;
  double p_drop = 0.2;  // condition dropout; must stay inside (0, 1)
  double lr = 1e-3;
  // Optional linear decay to lr * lr_final_frac across the first
  // lr_decay_horizon optimizer steps (global step count, so resumed training
  // follows the same schedule). 0 horizon = constant lr.
  std::int64_t lr_decay_horizon = 0;
  double lr_final_frac = 1.0;
};

inline double decayed_lr(double lr, std::int64_t global_step, std::int64_t horizon,
                         double final_frac) {
  if (horizon <= 0) return lr;
  const double u = std::min(1.0, static_cast<double>(global_step) / horizon);
  return lr * (final_frac + (1.0 - final_frac) * (1.0 - u));
}

struct TrainTrace {
  std::vector<double> loss;       // one entry per step
  std::int64_t skipped_updates = 0;
};

// Score model for the VP-SDE: one MLP serves both the conditional and the
// unconditional score. Input layout is [x; y_scaled; null_flag; time features]
// where setting the null flag zeroes the condition channel. The raw network
// output h is scaled to a score as s = h / std(t), which keeps the training
// target (h ~ -eps) well conditioned near t_eps.
class ScoreNet {
 public:
  ScoreNet() = default;
  ScoreNet(int dim, int hidden, int hidden_layers, int n_fourier,
           const DiffusionSchedule& sched, double y_mean, double y_std, std::uint64_t seed);

  int dim() const { return dim_; }
  const DiffusionSchedule& schedule() const { return sched_; }
  const Mlp& mlp() const { return mlp_; }
  Mlp& mutable_mlp() { return mlp_; }
  double y_mean() const { return y_mean_; }
  double y_std() const { return y_std_; }
  Eigen::Index input_dim() const { return mlp_.input_dim(); }

  double scale_condition(double y_raw) const { return (y_raw - y_mean_) / y_std_; }

  // Conditional score when y_raw is present, unconditional otherwise.
  template <class S>
  VecX<S> score(const VecX<S>& x, double t, std::optional<double> y_raw) const;

  // Value and J*V restricted to the x block, for divergence computations.
  std::pair<VectorXd, MatrixXd> score_tangents(const VectorXd& x, double t,
                                               std::optional<double> y_raw,
                                               const MatrixXd& tangents) const;

  // (d score / d x)^T u, for gradient ascent through the score.
  VectorXd score_vjp(const VectorXd& x, double t, std::optional<double> y_raw,
                     const VectorXd& cotangent) const;

  // Denoising score matching with condition dropout. Deterministic per
  // (seed, step); `adam` may carry optimizer state across calls for resume.
  TrainTrace train(const MatrixXd& X_model, const VectorXd& y_raw, const TrainBatchSpec& spec,
                   std::uint64_t seed, AdamState* adam = nullptr);

  void save(const std::filesystem::path& dir, const nlohmann::json& hyperparameters) const;
  static ScoreNet load(const std::filesystem::path& dir);

 private:
  template <class S>
  VecX<S> assemble_input(const VecX<S>& x, double t, std::optional<double> y_raw) const;
  VectorXd time_features(double t) const;

  int dim_ = 0;
  Mlp mlp_;
  VectorXd freqs_;  // fixed Fourier frequency bank
  DiffusionSchedule sched_;
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
};

// Free-function spellings used across the pipeline.
inline TrainTrace train_score(ScoreNet& net, const MatrixXd& X_model, const VectorXd& y_raw,
                              const TrainBatchSpec& spec, std::uint64_t seed,
                              AdamState* adam = nullptr) {
  return net.train(X_model, y_raw, spec, seed, adam);
}

template <class S>
VecX<S> score(const ScoreNet& net, const VecX<S>& x, double t, std::optional<double> y_raw) {
  return net.score(x, t, y_raw);
}

template <class S>
VecX<S> ScoreNet::assemble_input(const VecX<S>& x, double t, std::optional<double> y_raw) const {
  const VectorXd tf = time_features(t);
  VecX<S> in(mlp_.input_dim());
  for (int i = 0; i < dim_; ++i) in[i] = x[i];
  in[dim_] = S(y_raw ? scale_condition(*y_raw) : 0.0);
  in[dim_ + 1] = S(y_raw ? 0.0 : 1.0);
  for (Eigen::Index i = 0; i < tf.size(); ++i) in[dim_ + 2 + i] = S(tf[i]);
  return in;
}

template <class S>
VecX<S> ScoreNet::score(const VecX<S>& x, double t, std::optional<double> y_raw) const {
  sched_.require_time(t);
  if (x.size() != dim_) throw ConfigError("score: design dimension mismatch");
  if (!all_finite(x)) throw NumericError("score: non-finite input at t=" + std::to_string(t));
  const VecX<S> out = mlp_.forward(assemble_input(x, t, y_raw));
  return out * S(1.0 / sched_.std_dev(t));
}

}  // namespace rgd
