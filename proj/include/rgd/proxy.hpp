#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "rgd/adam.hpp"
#include "rgd/mlp.hpp"
#include "rgd/schedule.hpp"
#include "rgd/score_net.hpp"

namespace rgd {

struct ProxyTrainSpec {
  int batch = 128;
  std::int64_t steps = 10000;
  double lr = 1e-3;
  std::int64_t lr_decay_horizon = 0;
  double lr_final_frac = 1.0;
};

// Gaussian surrogate p(y|x) = N(mean(x), std(x)^2) over model-space designs
// (inputs are standardized with the dataset stats; predictions are reported
// in raw y units). The network trains on standardized targets, so the raw
// mean is y_mean + y_std * head and the raw std is y_std * exp(clamped head).
class ProxyModel {
 public:
  ProxyModel() = default;
  ProxyModel(int dim, int hidden, int hidden_layers, VectorXd x_mean, VectorXd x_std,
             double y_mean, double y_std, std::uint64_t seed, double log_std_min = -5.0,
             double log_std_max = 2.0);

  int dim() const { return dim_; }
  const Mlp& mlp() const { return mlp_; }
  Mlp& mutable_mlp() { return mlp_; }
  double y_mean() const { return y_mean_; }
  double y_std() const { return y_std_; }
  const VectorXd& x_mean() const { return x_mean_; }
  const VectorXd& x_std() const { return x_std_; }
  double log_std_min() const { return log_std_min_; }
  double log_std_max() const { return log_std_max_; }

  struct Heads {
    double mean_scaled;      // network mean head
    double log_std;          // clamped log-std head
    bool clamp_active;       // true when the raw head sits outside the bounds
  };
  Heads heads(const VectorXd& x) const;

  // Predicted property in standardized units; the quantity ascended during
  // sampling-time guidance so step sizes are scale-free.
  template <class S>
  S mean_scaled(const VecX<S>& x) const {
    return mlp_.forward(x)[0];
  }

  // Predicted property in raw y units.
  template <class S>
  S mean_raw(const VecX<S>& x) const {
    return S(y_mean_) + S(y_std_) * mean_scaled(x);
  }

  double std_raw(const VectorXd& x) const;

  // Exact Gaussian negative log-likelihood in raw units.
  double nll(const VectorXd& x, double y_raw) const;
  double log_pdf(const VectorXd& x, double y_raw) const { return -nll(x, y_raw); }

  // Draw y ~ p(.|x) given a standard normal z.
  double sample_y(const VectorXd& x, double z) const;

  VectorXd grad_x_mean_scaled(const VectorXd& x) const;

  // d log p(y|x) / d(mean head, log-std head), for score-function estimators.
  Eigen::Vector2d logpdf_head_grad(const Heads& h, double y_raw) const;
  // d log p(y|x) / d(parameters), flat layout.
  VectorXd logpdf_param_grad(const VectorXd& x, double y_raw) const;

  // Mean NLL over a batch and its parameter gradient (columns are samples).
  double nll_batch_grad(const MatrixXd& X_batch, const VectorXd& y_batch_raw,
                        VectorXd& grads) const;

  TrainTrace train(const MatrixXd& X_model, const VectorXd& y_raw, const ProxyTrainSpec& spec,
                   std::uint64_t seed, AdamState* adam = nullptr);

  void save(const std::filesystem::path& dir, const nlohmann::json& hyperparameters) const;
  static ProxyModel load(const std::filesystem::path& dir);

 private:
  int dim_ = 0;
  Mlp mlp_;
  VectorXd x_mean_, x_std_;
  double y_mean_ = 0.0, y_std_ = 1.0;
  double log_std_min_ = -5.0, log_std_max_ = 2.0;
};

inline TrainTrace train_proxy(ProxyModel& model, const MatrixXd& X_model, const VectorXd& y_raw,
                              const ProxyTrainSpec& spec, std::uint64_t seed,
                              AdamState* adam = nullptr) {
  return model.train(X_model, y_raw, spec, seed, adam);
}

struct AscentConfig {
  double eta = 0.05;  // step size in standardized input space
  int steps = 300;
};

struct AscentResult {
  MatrixXd trajectory;  // (steps+1) rows, d columns; row 0 is the start
  bool truncated = false;
};

// Plain gradient ascent on the proxy mean. On a non-finite gradient the
// trajectory is truncated at the last finite point and flagged.
template <class P>
AscentResult gradient_ascend(const P& proxy, const VectorXd& x0, const AscentConfig& cfg) {
  if (cfg.steps < 1) throw ConfigError("gradient_ascend needs at least one step");
  if (!x0.allFinite()) throw ConfigError("gradient_ascend: non-finite start");
  AscentResult res;
  res.trajectory.resize(cfg.steps + 1, x0.size());
  res.trajectory.row(0) = x0.transpose();
  VectorXd x = x0;
  for (int k = 1; k <= cfg.steps; ++k) {
    const VectorXd g = proxy.grad_x_mean_scaled(x);
    if (!g.allFinite()) {
      res.trajectory.conservativeResize(k, Eigen::NoChange);
      res.truncated = true;
      return res;
    }
    x += cfg.eta * g;
    res.trajectory.row(k) = x.transpose();
  }
  return res;
}

// Denoised estimate of the clean design from a noisy one, using the
// unconditional score: x0 = (x_t + score * var(t)) / mean_coeff(t).
template <class Model, class S>
VecX<S> tweedie_x0(const DiffusionSchedule& sched, const Model& model, const VecX<S>& x_t,
                   double t) {
  sched.require_time(t);
  const double mu = sched.mean_coeff(t);
  if (mu < 1e-8)
    throw NumericError("tweedie_x0: mean coefficient underflow at t=" + std::to_string(t));
  const VecX<S> s = model.score(x_t, t, std::nullopt);
  return (x_t + s * S(sched.variance(t))) * S(1.0 / mu);
}

// Predicted property of the denoised design, raw units.
template <class P, class Model, class S>
S proxy_at_time(const P& proxy, const DiffusionSchedule& sched, const Model& model,
                const VecX<S>& x_t, double t) {
  return proxy.mean_raw(tweedie_x0(sched, model, x_t, t));
}

// Same in standardized units; used by the sampling-time guidance.
template <class P, class Model, class S>
S proxy_at_time_scaled(const P& proxy, const DiffusionSchedule& sched, const Model& model,
                       const VecX<S>& x_t, double t) {
  return proxy.mean_scaled(tweedie_x0(sched, model, x_t, t));
}

}  // namespace rgd
