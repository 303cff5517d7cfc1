#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "rgd/parallel.hpp"
#include "rgd/proxy.hpp"
#include "rgd/rng.hpp"

namespace rgd {

// Designs produced by ascending the proxy from the top-scoring dataset rows.
// A design qualifies as adversarial when its proxy prediction exceeds the
// best true score in the data; if not all K qualify, the K highest-predicted
// finals are kept and the set is flagged.
struct AdversarialSet {
  MatrixXd designs;  // d x K, model space
  std::vector<int> start_index;
  AscentConfig ascent;
  bool fallback_used = false;
  int qualified = 0;
};

template <class P>
AdversarialSet build_adversarial_set(const P& proxy, const MatrixXd& X_model,
                                     const VectorXd& y_raw, const AscentConfig& cfg, int K) {
  const Eigen::Index n = X_model.cols();
  if (K < 1 || K > n) throw ConfigError("adversarial set size must be in [1, dataset size]");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + K, order.end(),
                    [&](int a, int b) { return y_raw[a] > y_raw[b]; });
  const double y_best = y_raw.maxCoeff();

  MatrixXd finals(X_model.rows(), K);
  VectorXd preds(K);
  std::vector<int> starts(K);
  for (int k = 0; k < K; ++k) {
    starts[k] = order[static_cast<std::size_t>(k)];
    const AscentResult res = gradient_ascend(proxy, VectorXd(X_model.col(starts[k])), cfg);
    finals.col(k) = res.trajectory.row(res.trajectory.rows() - 1).transpose();
    preds[k] = proxy.mean_raw(VectorXd(finals.col(k)));
  }

  AdversarialSet out;
  out.ascent = cfg;
  std::vector<int> keep;
  for (int k = 0; k < K; ++k)
    if (preds[k] > y_best) keep.push_back(k);
  out.qualified = static_cast<int>(keep.size());
  if (out.qualified < K) {
    // fall back to the K highest-predicted finals
    keep.resize(static_cast<std::size_t>(K));
    std::iota(keep.begin(), keep.end(), 0);
    std::sort(keep.begin(), keep.end(), [&](int a, int b) { return preds[a] > preds[b]; });
    out.fallback_used = true;
  }
  if (keep.empty()) throw ConfigError("no adversarial candidates available");
  out.designs.resize(X_model.rows(), static_cast<Eigen::Index>(keep.size()));
  out.start_index.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.designs.col(static_cast<Eigen::Index>(i)) = finals.col(keep[i]);
    out.start_index.push_back(starts[static_cast<std::size_t>(keep[i])]);
  }
  if (!out.designs.allFinite()) throw NumericError("adversarial designs are not finite");
  return out;
}

// Monte-Carlo KL(p_proxy || p_model) at one design. Draws stay retained so
// the score-function gradient can reuse them (common random numbers), and so
// cached posterior terms survive across optimizer steps.
struct KlEstimate {
  double value = 0.0;
  int m = 0;            // requested draw count
  VectorXd y_draws;     // retained draws
  VectorXd log_p_theta; // posterior log-density per retained draw
  bool dropped_any = false;
};

template <class PosteriorFn>
KlEstimate kl_mc(const ProxyModel& proxy, PosteriorFn&& posterior, const VectorXd& x_hat, int M,
                 std::uint64_t seed) {
  if (M < 1) throw ConfigError("kl_mc needs at least one sample");
  Rng rng(fold_seed({seed, kStreamKlDraw}));
  KlEstimate est;
  est.m = M;
  std::vector<double> ys, lpt;
  ys.reserve(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    const double y = proxy.sample_y(x_hat, rng.normal());
    const double lp_theta = posterior(x_hat, y);
    if (!std::isfinite(lp_theta)) {
      est.dropped_any = true;
      continue;
    }
    ys.push_back(y);
    lpt.push_back(lp_theta);
  }
  if (ys.empty()) throw NumericError("kl_mc: every posterior term was non-finite");
  est.y_draws = Eigen::Map<const VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  est.log_p_theta = Eigen::Map<const VectorXd>(lpt.data(), static_cast<Eigen::Index>(lpt.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < est.y_draws.size(); ++i)
    acc += proxy.log_pdf(x_hat, est.y_draws[i]) - est.log_p_theta[i];
  est.value = acc / static_cast<double>(est.y_draws.size());
  return est;
}

// Score-function estimator of d KL / d phi from retained draws:
//   mean_m [ dlog p_phi(y_m|x)/dphi * (1 + log p_phi(y_m|x) - log p_theta(y_m|x)) ].
// The proxy log-density is re-evaluated at the current parameters; the
// posterior terms are the cached constants (no gradient flows through them).
inline VectorXd kl_grad_from(const ProxyModel& proxy, const VectorXd& x_hat,
                             const KlEstimate& est, double* kl_value = nullptr) {
  const ProxyModel::Heads h = proxy.heads(x_hat);
  Eigen::Vector2d cot = Eigen::Vector2d::Zero();
  double value = 0.0;
  for (Eigen::Index i = 0; i < est.y_draws.size(); ++i) {
    const double lp_phi = proxy.log_pdf(x_hat, est.y_draws[i]);
    const double w = 1.0 + lp_phi - est.log_p_theta[i];
    cot += w * proxy.logpdf_head_grad(h, est.y_draws[i]);
    value += lp_phi - est.log_p_theta[i];
  }
  const double inv = 1.0 / static_cast<double>(est.y_draws.size());
  cot *= inv;
  if (kl_value) *kl_value = value * inv;
  VectorXd pg;
  proxy.mlp().backward(x_hat, cot, pg);
  return pg;
}

template <class PosteriorFn>
VectorXd kl_grad(const ProxyModel& proxy, PosteriorFn&& posterior, const VectorXd& x_hat, int M,
                 std::uint64_t seed, KlEstimate* out_est = nullptr) {
  KlEstimate est = kl_mc(proxy, std::forward<PosteriorFn>(posterior), x_hat, M, seed);
  VectorXd g = kl_grad_from(proxy, x_hat, est);
  if (out_est) *out_est = std::move(est);
  return g;
}

// Importance-sampling estimate of E_{p_theta}[y] with proposal p_proxy.
struct MeanEstimate {
  double value = 0.0;
  double ess = 0.0;
  bool unreliable = false;
  int used = 0;
};

template <class PosteriorFn>
MeanEstimate diffusion_mean(const ProxyModel& proxy, PosteriorFn&& posterior,
                            const VectorXd& x_hat, int M, std::uint64_t seed,
                            bool self_normalized = true) {
  if (M < 100) throw ConfigError("diffusion_mean needs at least 100 samples");
  Rng rng(fold_seed({seed, kStreamKlDraw, 0x6d65616eULL}));
  std::vector<double> ys, logw;
  for (int m = 0; m < M; ++m) {
    const double y = proxy.sample_y(x_hat, rng.normal());
    const double lp_theta = posterior(x_hat, y);
    if (!std::isfinite(lp_theta)) continue;
    ys.push_back(y);
    logw.push_back(lp_theta - proxy.log_pdf(x_hat, y));
  }
  if (ys.empty()) throw NumericError("diffusion_mean: every posterior term was non-finite");
  const double lmax = *std::max_element(logw.begin(), logw.end());
  double wsum = 0.0, w2sum = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double w = std::exp(logw[i] - lmax);
    wsum += w;
    w2sum += w * w;
    acc += w * ys[i];
  }
  MeanEstimate out;
  out.used = static_cast<int>(ys.size());
  out.ess = wsum * wsum / w2sum;
  out.unreliable = out.ess < 5.0;
  if (self_normalized) {
    out.value = acc / wsum;
  } else {
    // raw variant: weights exp(log w) averaged over the draw count
    out.value = acc * std::exp(lmax) / static_cast<double>(ys.size());
  }
  return out;
}

// --- proxy refinement -------------------------------------------------------

struct AlphaState {
  double log_alpha = 0.0;  // alpha = exp(log_alpha) stays positive
  double outer_lr = 1e-2;
  double alpha() const { return std::exp(log_alpha); }
};

struct RefineConfig {
  std::int64_t steps = 200;
  int inner_batch = 256;
  int val_batch = 256;
  int adv_batch = 16;       // adversarial designs per inner step
  int mc_samples = 8;       // y draws per design per refresh
  std::int64_t kl_refresh = 50;  // steps between posterior refreshes
  double inner_lr = 1e-3;
  double val_fraction = 0.1;
  int workers = 1;
  // Pins alpha to a constant (no outer updates). Zero disables the KL term
  // entirely, which reduces every step to a plain NLL step on the dataset.
  std::optional<double> fixed_alpha;
};

struct RefineResult {
  std::vector<double> alpha_trace;
  std::vector<double> kl_trace;
  std::vector<double> train_nll_trace;
  std::vector<double> val_nll_trace;
  std::vector<Eigen::Index> val_indices;
  bool alpha_clamped = false;
  std::int64_t skipped_updates = 0;
};

// KL-regularized continuation of proxy training (one Adam step per batch on
// NLL + alpha * KL, one first-order update of log_alpha per batch). Posterior
// terms for the adversarial designs are drawn and solved every `kl_refresh`
// steps; between refreshes the retained draws are reused with the proxy
// log-density re-evaluated at the current parameters.
//
// PosteriorOracle: (int design_index, const VectorXd& x_hat, double y) -> double.
template <class PosteriorOracle>
RefineResult refine_proxy(ProxyModel& proxy, const MatrixXd& X_model, const VectorXd& y_raw,
                          const AdversarialSet& adv, PosteriorOracle&& posterior,
                          AlphaState& alpha, const RefineConfig& cfg, std::uint64_t seed) {
  const Eigen::Index n = X_model.cols();
  if (n == 0) throw ConfigError("refine_proxy: empty dataset");
  const int K = static_cast<int>(adv.designs.cols());

  // validation subset, fixed per run seed
  RefineResult res;
  {
    Rng split_rng(fold_seed({seed, kStreamSplit}));
    const Eigen::Index n_val =
        std::max<Eigen::Index>(1, static_cast<Eigen::Index>(cfg.val_fraction * n));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (Eigen::Index i = n - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)],
                order[split_rng.index(static_cast<std::size_t>(i) + 1)]);
    res.val_indices.assign(order.begin(), order.begin() + n_val);
  }

  const double alpha_fixed = cfg.fixed_alpha.value_or(-1.0);
  const bool kl_active = !(cfg.fixed_alpha && *cfg.fixed_alpha == 0.0) && K > 0;
  if (cfg.fixed_alpha && *cfg.fixed_alpha > 0.0) alpha.log_alpha = std::log(alpha_fixed);

  AdamState adam(proxy.mlp().param_count(), {cfg.inner_lr});
  std::vector<KlEstimate> cache(static_cast<std::size_t>(K));
  std::int64_t refresh_epoch = 0;

  MatrixXd Xb(X_model.rows(), cfg.inner_batch);
  VectorXd yb(cfg.inner_batch);
  MatrixXd Xv(X_model.rows(), cfg.val_batch);
  VectorXd yv(cfg.val_batch);

  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    // inner NLL batch over the full dataset (same stream as plain training,
    // so the fixed-alpha=0 path continues train_proxy bitwise)
    Rng rng_train(fold_seed({seed, static_cast<std::uint64_t>(step), kStreamTrainBatch}));
    for (int b = 0; b < cfg.inner_batch; ++b) {
      const std::size_t idx = rng_train.index(static_cast<std::size_t>(n));
      Xb.col(b) = X_model.col(static_cast<Eigen::Index>(idx));
      yb[b] = y_raw[static_cast<Eigen::Index>(idx)];
    }
    VectorXd g_nll;
    const double train_nll = proxy.nll_batch_grad(Xb, yb, g_nll);

    VectorXd g_kl = VectorXd::Zero(proxy.mlp().param_count());
    double kl_value = 0.0;
    if (kl_active) {
      if (step % cfg.kl_refresh == 0) {
        const std::uint64_t epoch = static_cast<std::uint64_t>(refresh_epoch++);
        parallel_for(K, cfg.workers, [&](int j) {
          cache[static_cast<std::size_t>(j)] = kl_mc(
              proxy, [&](const VectorXd& xh, double y) { return posterior(j, xh, y); },
              VectorXd(adv.designs.col(j)), cfg.mc_samples,
              fold_seed({seed, epoch, static_cast<std::uint64_t>(j), kStreamKlDraw}));
        });
      }
      Rng rng_kl(fold_seed({seed, static_cast<std::uint64_t>(step), kStreamKlDraw}));
      const int nb = std::min(cfg.adv_batch, K);
      for (int b = 0; b < nb; ++b) {
        const int j = static_cast<int>(rng_kl.index(static_cast<std::size_t>(K)));
        double v = 0.0;
        g_kl += kl_grad_from(proxy, VectorXd(adv.designs.col(j)),
                             cache[static_cast<std::size_t>(j)], &v);
        kl_value += v;
      }
      g_kl /= nb;
      kl_value /= nb;
    }

    const double a = cfg.fixed_alpha ? *cfg.fixed_alpha : alpha.alpha();
    VectorXd g_total = g_nll;
    if (kl_active && a != 0.0) g_total += a * g_kl;
    if (!adam.step(proxy.mutable_mlp().mutable_params(), g_total)) ++res.skipped_updates;

    // outer step on the validation objective at the post-step parameters
    double val_nll = 0.0;
    {
      Rng rng_val(fold_seed({seed, static_cast<std::uint64_t>(step), kStreamValBatch}));
      for (int b = 0; b < cfg.val_batch; ++b) {
        const std::size_t pick = rng_val.index(res.val_indices.size());
        const Eigen::Index idx = res.val_indices[pick];
        Xv.col(b) = X_model.col(idx);
        yv[b] = y_raw[idx];
      }
      VectorXd g_val;
      val_nll = proxy.nll_batch_grad(Xv, yv, g_val);
      if (!cfg.fixed_alpha && kl_active) {
        const double dval_dlog_alpha = -cfg.inner_lr * g_val.dot(g_kl) * alpha.alpha();
        alpha.log_alpha -= alpha.outer_lr * dval_dlog_alpha;
        // clamp keeps alpha = exp(log_alpha) finite and strictly positive
        if (alpha.log_alpha > 10.0 || alpha.log_alpha < -10.0) {
          alpha.log_alpha = std::clamp(alpha.log_alpha, -10.0, 10.0);
          res.alpha_clamped = true;
        }
      }
    }

    res.alpha_trace.push_back(cfg.fixed_alpha ? *cfg.fixed_alpha : alpha.alpha());
    res.kl_trace.push_back(kl_value);
    res.train_nll_trace.push_back(train_nll);
    res.val_nll_trace.push_back(val_nll);
  }
  return res;
}

}  // namespace rgd
