#pragma once

#include <cstdint>
#include <optional>

#include "rgd/rng.hpp"
#include "rgd/schedule.hpp"
#include "rgd/types.hpp"

namespace rgd {

struct FlowOdeConfig {
  int ode_steps = 100;  // fixed Heun steps over [t_eps, 1]
  enum class Divergence { kExact, kHutchinson } divergence = Divergence::kExact;
  int probes = 8;               // Rademacher probes in Hutchinson mode
  std::uint64_t probe_seed = 0;
};

// Exact log-density under the model's probability-flow ODE:
//   log p(x0) = log N(x1; 0, I) + int_{t_eps}^{1} div f(x_t, t) dt,
// with f(x, t) = -beta(t)/2 * (x + score(x, t)) integrated forward by
// fixed-step Heun. The divergence uses d forward-mode directional
// derivatives (basis vectors, evaluated as one batched tangent pass) in
// exact mode, or Rademacher probes in Hutchinson mode.
template <class Model>
double log_density(const Model& model, const DiffusionSchedule& sched, const VectorXd& x0,
                   std::optional<double> condition, const FlowOdeConfig& cfg) {
  if (cfg.ode_steps < 10) throw ConfigError("ode_steps must be at least 10");
  const bool exact = cfg.divergence == FlowOdeConfig::Divergence::kExact;
  if (!exact && cfg.probes < 1) throw ConfigError("hutchinson needs at least one probe");
  if (!x0.allFinite()) throw NumericError("log_density: non-finite input");

  const Eigen::Index d = x0.size();
  Rng probe_rng(fold_seed({cfg.probe_seed, kStreamProbe}));
  const MatrixXd eye = MatrixXd::Identity(d, d);

  auto rhs = [&](const VectorXd& x, double t, VectorXd& fx, double& div) {
    MatrixXd V;
    if (exact) {
      V = eye;
    } else {
      V.resize(d, cfg.probes);
      for (Eigen::Index c = 0; c < cfg.probes; ++c)
        for (Eigen::Index r = 0; r < d; ++r) V(r, c) = probe_rng.rademacher();
    }
    const auto [s, T] = model.score_tangents(x, t, condition, V);
    const double half_beta = 0.5 * sched.beta(t);
    fx = -half_beta * (x + s);
    double trace = 0.0;
    if (exact) {
      for (Eigen::Index i = 0; i < d; ++i) trace += T(i, i);
    } else {
      for (Eigen::Index c = 0; c < cfg.probes; ++c) trace += V.col(c).dot(T.col(c));
      trace /= cfg.probes;
    }
    div = -half_beta * (static_cast<double>(d) + trace);
  };

  const double h = (1.0 - sched.t_eps) / cfg.ode_steps;
  VectorXd x = x0;
  double logdet = 0.0;
  VectorXd k1(d), k2(d);
  double d1 = 0.0, d2 = 0.0;
  for (int i = 0; i < cfg.ode_steps; ++i) {
    const double t = sched.t_eps + i * h;
    rhs(x, t, k1, d1);
    const VectorXd xp = x + h * k1;
    rhs(xp, t + h, k2, d2);
    x += 0.5 * h * (k1 + k2);
    logdet += 0.5 * h * (d1 + d2);
    if (!x.allFinite() || !std::isfinite(logdet))
      throw NumericError("log_density: non-finite state at step " + std::to_string(i) +
                         " (t=" + std::to_string(t) + ")");
  }
  const double log_prior =
      -0.5 * x.squaredNorm() - 0.5 * static_cast<double>(d) * std::log(2.0 * M_PI);
  return log_prior + logdet;
}

// Gaussian kernel density estimate over scalar scores.
struct KdeModel {
  VectorXd ys;
  double bandwidth = 1.0;
};

// Silverman's rule: h = 1.06 * std(y) * N^(-1/5). Needs at least two samples.
inline KdeModel make_kde(const VectorXd& ys) {
  if (ys.size() < 2) throw ConfigError("silverman bandwidth needs at least two samples");
  const double mean = ys.mean();
  const double sd = std::sqrt((ys.array() - mean).square().sum() / (ys.size() - 1));
  const double h = 1.06 * sd * std::pow(static_cast<double>(ys.size()), -0.2);
  if (!(h > 0.0)) throw ConfigError("degenerate kde bandwidth (constant scores?)");
  return {ys, h};
}

// Explicit bandwidth; permits the single-sample fallback.
inline KdeModel make_kde(const VectorXd& ys, double bandwidth) {
  if (ys.size() < 1) throw ConfigError("kde needs at least one sample");
  if (!(bandwidth > 0.0)) throw ConfigError("kde bandwidth must be positive");
  return {ys, bandwidth};
}

inline double kde_logpdf(const KdeModel& kde, double y) {
  const double h2 = kde.bandwidth * kde.bandwidth;
  double maxe = -std::numeric_limits<double>::infinity();
  VectorXd es(kde.ys.size());
  for (Eigen::Index i = 0; i < kde.ys.size(); ++i) {
    const double dlt = y - kde.ys[i];
    es[i] = -0.5 * dlt * dlt / h2;
    maxe = std::max(maxe, es[i]);
  }
  const double sum = (es.array() - maxe).exp().sum();
  return maxe + std::log(sum) - std::log(static_cast<double>(kde.ys.size())) -
         0.5 * std::log(2.0 * M_PI * h2);
}

// Caches the unconditional solve for one design so repeated y-queries cost a
// single conditional solve each. The record is bound to its design.
struct PosteriorRecord {
  VectorXd x_hat;
  std::optional<double> log_px;
  long uncond_solves = 0;
};

// log p(y | x_hat) = log p(x_hat | y) + log p(y) - log p(x_hat).
template <class Model>
double posterior_logpdf(const Model& model, const DiffusionSchedule& sched, const KdeModel& kde,
                        PosteriorRecord& rec, double y, const FlowOdeConfig& cfg) {
  if (!rec.log_px) {
    rec.log_px = log_density(model, sched, rec.x_hat, std::nullopt, cfg);
    ++rec.uncond_solves;
  }
  const double log_cond = log_density(model, sched, rec.x_hat, y, cfg);
  return log_cond + kde_logpdf(kde, y) - *rec.log_px;
}

}  // namespace rgd
