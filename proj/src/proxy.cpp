#include "rgd/proxy.hpp"

#include <cmath>

#include "rgd/checkpoint.hpp"
#include "rgd/rng.hpp"

namespace rgd {

namespace {
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))
}

ProxyModel::ProxyModel(int dim, int hidden, int hidden_layers, VectorXd x_mean, VectorXd x_std,
                       double y_mean, double y_std, std::uint64_t seed, double log_std_min,
                       double log_std_max)
    : dim_(dim),
      x_mean_(std::move(x_mean)),
      x_std_(std::move(x_std)),
      y_mean_(y_mean),
      y_std_(y_std),
      log_std_min_(log_std_min),
      log_std_max_(log_std_max) {
  if (dim <= 0 || hidden <= 0 || hidden_layers <= 0)
    throw ConfigError("proxy dims must be positive");
  if (!(y_std > 0.0)) throw ConfigError("proxy requires positive y std");
  if (!(log_std_min < log_std_max)) throw ConfigError("bad log-std clamp bounds");
  std::vector<Eigen::Index> dims;
  dims.push_back(dim);
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden);
  dims.push_back(2);
  mlp_ = Mlp(dims, Activation::kSilu, seed);
}

ProxyModel::Heads ProxyModel::heads(const VectorXd& x) const {
  const VectorXd out = mlp_(x);
  const double raw = out[1];
  const double clamped = std::clamp(raw, log_std_min_, log_std_max_);
  return {out[0], clamped, raw != clamped};
}

double ProxyModel::std_raw(const VectorXd& x) const {
  return y_std_ * std::exp(heads(x).log_std);
}

double ProxyModel::nll(const VectorXd& x, double y_raw) const {
  const Heads h = heads(x);
  const double ys = (y_raw - y_mean_) / y_std_;
  const double r = (ys - h.mean_scaled) * std::exp(-h.log_std);
  return kLogSqrt2Pi + std::log(y_std_) + h.log_std + 0.5 * r * r;
}

double ProxyModel::sample_y(const VectorXd& x, double z) const {
  const Heads h = heads(x);
  return y_mean_ + y_std_ * (h.mean_scaled + std::exp(h.log_std) * z);
}

VectorXd ProxyModel::grad_x_mean_scaled(const VectorXd& x) const {
  VectorXd pg;
  VectorXd cot = VectorXd::Zero(2);
  cot[0] = 1.0;
  return mlp_.backward(x, cot, pg);
}

Eigen::Vector2d ProxyModel::logpdf_head_grad(const Heads& h, double y_raw) const {
  const double ys = (y_raw - y_mean_) / y_std_;
  const double e2 = std::exp(-2.0 * h.log_std);
  Eigen::Vector2d g;
  g[0] = (ys - h.mean_scaled) * e2;
  g[1] = h.clamp_active ? 0.0 : ((ys - h.mean_scaled) * (ys - h.mean_scaled) * e2 - 1.0);
  return g;
}

VectorXd ProxyModel::logpdf_param_grad(const VectorXd& x, double y_raw) const {
  const Heads h = heads(x);
  VectorXd pg;
  mlp_.backward(x, logpdf_head_grad(h, y_raw), pg);
  return pg;
}

double ProxyModel::nll_batch_grad(const MatrixXd& X_batch, const VectorXd& y_batch_raw,
                                  VectorXd& grads) const {
  const int batch = static_cast<int>(X_batch.cols());
  if (batch == 0 || y_batch_raw.size() != batch) throw ConfigError("nll batch shape mismatch");
  Mlp::Cache cache;
  const MatrixXd out = mlp_.forward_batch(X_batch, cache);
  MatrixXd cot(2, batch);
  double loss = 0.0;
  for (int b = 0; b < batch; ++b) {
    const double m = out(0, b);
    const double raw = out(1, b);
    const double r = std::clamp(raw, log_std_min_, log_std_max_);
    const bool active = raw != r;
    const double e2 = std::exp(-2.0 * r);
    const double diff = (y_batch_raw[b] - y_mean_) / y_std_ - m;
    loss += kLogSqrt2Pi + std::log(y_std_) + r + 0.5 * diff * diff * e2;
    cot(0, b) = -diff * e2 / batch;
    cot(1, b) = active ? 0.0 : (1.0 - diff * diff * e2) / batch;
  }
  mlp_.backward_batch(cache, cot, grads);
  return loss / batch;
}

TrainTrace ProxyModel::train(const MatrixXd& X_model, const VectorXd& y_raw,
                             const ProxyTrainSpec& spec, std::uint64_t seed, AdamState* adam) {
  const Eigen::Index n = X_model.cols();
  if (n == 0) throw ConfigError("train_proxy: empty dataset");
  if (X_model.rows() != dim_) throw ConfigError("train_proxy: design dimension mismatch");
  if (y_raw.size() != n) throw ConfigError("train_proxy: score count mismatch");

  AdamState local(mlp_.param_count(), {spec.lr});
  AdamState& opt = adam ? *adam : local;
  const std::int64_t start = opt.steps();

  TrainTrace trace;
  trace.loss.reserve(static_cast<std::size_t>(spec.steps));
  VectorXd grads(mlp_.param_count());
  MatrixXd in(dim_, spec.batch);
  VectorXd yb(spec.batch);

  for (std::int64_t step = start; step < start + spec.steps; ++step) {
    opt.set_lr(decayed_lr(spec.lr, step, spec.lr_decay_horizon, spec.lr_final_frac));
    Rng rng(fold_seed({seed, static_cast<std::uint64_t>(step), kStreamTrainBatch}));
    for (int b = 0; b < spec.batch; ++b) {
      const std::size_t idx = rng.index(static_cast<std::size_t>(n));
      in.col(b) = X_model.col(idx);
      yb[b] = y_raw[idx];
    }
    const double loss = nll_batch_grad(in, yb, grads);
    if (!std::isfinite(loss))
      throw NumericError("train_proxy: non-finite loss at step " + std::to_string(step));
    if (!opt.step(mlp_.mutable_params(), grads)) ++trace.skipped_updates;
    trace.loss.push_back(loss);
  }
  return trace;
}

void ProxyModel::save(const std::filesystem::path& dir,
                      const nlohmann::json& hyperparameters) const {
  nlohmann::json extra;
  extra["dim"] = dim_;
  extra["x_mean"] = std::vector<double>(x_mean_.data(), x_mean_.data() + x_mean_.size());
  extra["x_std"] = std::vector<double>(x_std_.data(), x_std_.data() + x_std_.size());
  extra["y_mean"] = y_mean_;
  extra["y_std"] = y_std_;
  extra["log_std_min"] = log_std_min_;
  extra["log_std_max"] = log_std_max_;
  save_checkpoint(dir, mlp_, "proxy", hyperparameters, extra);
}

ProxyModel ProxyModel::load(const std::filesystem::path& dir) {
  auto [net, manifest] = load_checkpoint(dir);
  if (manifest.at("kind") != "proxy")
    throw ConfigError("checkpoint at " + dir.string() + " is not a proxy");
  const auto& extra = manifest.at("extra");
  ProxyModel p;
  p.dim_ = extra.at("dim").get<int>();
  const auto xm = extra.at("x_mean").get<std::vector<double>>();
  const auto xs = extra.at("x_std").get<std::vector<double>>();
  p.x_mean_ = Eigen::Map<const VectorXd>(xm.data(), static_cast<Eigen::Index>(xm.size()));
  p.x_std_ = Eigen::Map<const VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  p.y_mean_ = extra.at("y_mean").get<double>();
  p.y_std_ = extra.at("y_std").get<double>();
  p.log_std_min_ = extra.at("log_std_min").get<double>();
  p.log_std_max_ = extra.at("log_std_max").get<double>();
  p.mlp_ = std::move(net);
  return p;
}

}  // namespace rgd
