#include "rgd/score_net.hpp"

#include <cmath>

#include "rgd/checkpoint.hpp"
#include "rgd/rng.hpp"

namespace rgd {

namespace {
constexpr double kTwoPi = 6.283185307179586;
}

ScoreNet::ScoreNet(int dim, int hidden, int hidden_layers, int n_fourier,
                   const DiffusionSchedule& sched, double y_mean, double y_std,
                   std::uint64_t seed)
    : dim_(dim), sched_(sched), y_mean_(y_mean), y_std_(y_std) {
  if (dim <= 0 || hidden <= 0 || hidden_layers <= 0 || n_fourier <= 0)
    throw ConfigError("score net dims must be positive");
  if (!(y_std > 0.0)) throw ConfigError("score net requires positive y std");
  freqs_.resize(n_fourier);
  // frequencies log-spaced in [1, 100]
  for (int i = 0; i < n_fourier; ++i) {
    const double u = n_fourier == 1 ? 0.0 : static_cast<double>(i) / (n_fourier - 1);
    freqs_[i] = std::pow(10.0, 2.0 * u);
  }
  std::vector<Eigen::Index> dims;
  dims.push_back(dim + 2 + 2 * n_fourier);
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden);
  dims.push_back(dim);
  mlp_ = Mlp(dims, Activation::kSilu, seed);
}

VectorXd ScoreNet::time_features(double t) const {
  VectorXd tf(2 * freqs_.size());
  for (Eigen::Index i = 0; i < freqs_.size(); ++i) {
    tf[2 * i] = std::sin(kTwoPi * freqs_[i] * t);
    tf[2 * i + 1] = std::cos(kTwoPi * freqs_[i] * t);
  }
  return tf;
}

std::pair<VectorXd, MatrixXd> ScoreNet::score_tangents(const VectorXd& x, double t,
                                                       std::optional<double> y_raw,
                                                       const MatrixXd& tangents) const {
  sched_.require_time(t);
  if (tangents.rows() != dim_) throw ConfigError("score_tangents: tangent shape mismatch");
  const VectorXd in = assemble_input<double>(x, t, y_raw);
  MatrixXd full = MatrixXd::Zero(mlp_.input_dim(), tangents.cols());
  full.topRows(dim_) = tangents;
  auto [value, T] = mlp_.tangent_batch(in, full);
  const double inv = 1.0 / sched_.std_dev(t);
  value *= inv;
  T *= inv;
  return {std::move(value), std::move(T)};
}

VectorXd ScoreNet::score_vjp(const VectorXd& x, double t, std::optional<double> y_raw,
                             const VectorXd& cotangent) const {
  sched_.require_time(t);
  const VectorXd in = assemble_input<double>(x, t, y_raw);
  VectorXd pg;
  const VectorXd ig = mlp_.backward(in, cotangent, pg);
  return ig.head(dim_) / sched_.std_dev(t);
}

TrainTrace ScoreNet::train(const MatrixXd& X_model, const VectorXd& y_raw,
                           const TrainBatchSpec& spec, std::uint64_t seed, AdamState* adam) {
  const Eigen::Index n = X_model.cols();
  if (n == 0) throw ConfigError("train_score: empty dataset");
  if (X_model.rows() != dim_) throw ConfigError("train_score: design dimension mismatch");
  if (y_raw.size() != n) throw ConfigError("train_score: score count mismatch");
  if (!(spec.p_drop > 0.0 && spec.p_drop < 1.0))
    throw ConfigError("condition dropout must be strictly inside (0, 1)");

  AdamState local(mlp_.param_count(), {spec.lr});
  AdamState& opt = adam ? *adam : local;
  const std::int64_t start = opt.steps();

  TrainTrace trace;
  trace.loss.reserve(static_cast<std::size_t>(spec.steps));
  VectorXd grads(mlp_.param_count());
  Mlp::Cache cache;
  MatrixXd in(mlp_.input_dim(), spec.batch);
  MatrixXd eps(dim_, spec.batch);

  for (std::int64_t step = start; step < start + spec.steps; ++step) {
    opt.set_lr(decayed_lr(spec.lr, step, spec.lr_decay_horizon, spec.lr_final_frac));
    Rng rng(fold_seed({seed, static_cast<std::uint64_t>(step), kStreamTrainBatch}));
    double t_last = 0.0;
    for (int b = 0; b < spec.batch; ++b) {
      const std::size_t idx = rng.index(static_cast<std::size_t>(n));
      const double t = rng.uniform_in(sched_.t_eps, 1.0);
      t_last = t;
      const VectorXd e = rng.normal_vec(dim_);
      const VectorXd xt =
          sched_.mean_coeff(t) * X_model.col(idx) + sched_.std_dev(t) * e;
      const bool drop = rng.uniform() < spec.p_drop;
      in.col(b) = assemble_input<double>(
          xt, t, drop ? std::nullopt : std::optional<double>(y_raw[idx]));
      eps.col(b) = e;
    }
    const MatrixXd h = mlp_.forward_batch(in, cache);
    const MatrixXd r = h + eps;  // sigma * score + eps
    const double loss = r.squaredNorm() / spec.batch;
    if (!std::isfinite(loss))
      throw NumericError("train_score: non-finite loss at step " + std::to_string(step) +
                         " (t=" + std::to_string(t_last) + ")");
    mlp_.backward_batch(cache, MatrixXd((2.0 / spec.batch) * r), grads);
    if (!opt.step(mlp_.mutable_params(), grads)) ++trace.skipped_updates;
    trace.loss.push_back(loss);
  }
  return trace;
}

void ScoreNet::save(const std::filesystem::path& dir, const nlohmann::json& hyperparameters) const {
  nlohmann::json extra;
  extra["dim"] = dim_;
  extra["fourier_freqs"] = std::vector<double>(freqs_.data(), freqs_.data() + freqs_.size());
  extra["schedule"] = {{"beta_min", sched_.beta_min},
                       {"beta_max", sched_.beta_max},
                       {"t_eps", sched_.t_eps}};
  extra["y_mean"] = y_mean_;
  extra["y_std"] = y_std_;
  save_checkpoint(dir, mlp_, "score_net", hyperparameters, extra);
}

ScoreNet ScoreNet::load(const std::filesystem::path& dir) {
  auto [net, manifest] = load_checkpoint(dir);
  if (manifest.at("kind") != "score_net")
    throw ConfigError("checkpoint at " + dir.string() + " is not a score net");
  const auto& extra = manifest.at("extra");
  ScoreNet s;
  s.dim_ = extra.at("dim").get<int>();
  const auto freqs = extra.at("fourier_freqs").get<std::vector<double>>();
  s.freqs_ = Eigen::Map<const VectorXd>(freqs.data(), static_cast<Eigen::Index>(freqs.size()));
  s.sched_.beta_min = extra.at("schedule").at("beta_min").get<double>();
  s.sched_.beta_max = extra.at("schedule").at("beta_max").get<double>();
  s.sched_.t_eps = extra.at("schedule").at("t_eps").get<double>();
  s.y_mean_ = extra.at("y_mean").get<double>();
  s.y_std_ = extra.at("y_std").get<double>();
  s.mlp_ = std::move(net);
  return s;
}

}  // namespace rgd
