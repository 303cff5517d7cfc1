#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rgd/parallel.hpp"
#include "rgd/proxy.hpp"
#include "rgd/rng.hpp"
#include "rgd/schedule.hpp"

namespace rgd {

enum class Strategy {
  kRgd,             // per-step guidance-strength ascent on the proxy
  kFixedOmega,      // constant strength (the sampler with guidance ascent off)
  kCosineIncrease,  // cosine ramp from cos_lo up to cos_hi over the reverse pass
  kCosineDecrease,  // cosine ramp from cos_hi down to cos_lo
  kDirectGrad,      // constant strength plus explicit proxy ascent on the state
};

Strategy strategy_from_string(const std::string& name);
std::string strategy_name(Strategy s);

struct SamplerConfig {
  int T = 1000;
  double y_cond = 0.0;   // condition, raw score units
  double omega0 = 2.0;
  double eta = 0.01;     // strength learning rate
  int k_omega = 1;       // ascent steps per diffusion step
  Strategy strategy = Strategy::kRgd;
  double cos_lo = 0.0;
  double cos_hi = 4.0;
  double direct_lr = 0.1;

  void validate() const {
    if (T < 2) throw ConfigError("sampler needs T >= 2");
    if (!(std::isfinite(y_cond) && std::isfinite(omega0) && std::isfinite(eta) &&
          std::isfinite(cos_lo) && std::isfinite(cos_hi) && std::isfinite(direct_lr)))
      throw ConfigError("sampler config has non-finite parameters");
    if (k_omega < 0) throw ConfigError("k_omega must be non-negative");
  }
};

struct SamplerState {
  VectorXd x;
  int t_index = 0;
  double omega = 0.0;
  VectorXd omega_traj;  // length T, in execution order
  std::uint64_t chain_seed = 0;
  int omega_flags = 0;  // non-finite strength derivatives encountered
};

struct Candidate {
  VectorXd x0_model;
  double condition = 0.0;
  double final_omega = 0.0;
  std::optional<double> oracle_score;
};

struct ChainResult {
  Candidate candidate;
  SamplerState state;
};

// (1 + omega) * conditional score - omega * unconditional score.
template <class Model, class S>
VecX<S> guided_score(const Model& model, const VecX<S>& x, double t, double y_raw, const S& omega) {
  const VecX<S> sc = model.score(x, t, std::optional<double>(y_raw));
  const VecX<S> su = model.score(x, t, std::nullopt);
  VecX<S> out = sc * (S(1.0) + omega) - su * omega;
  if (!all_finite(out))
    throw NumericError("guided_score: non-finite score at t=" + std::to_string(t) +
                       ", omega=" + std::to_string(value_of(omega)));
  return out;
}

// One predictor-corrector step of the reverse probability-flow ODE
//   dx/dt = -beta(t)/2 * (x + guided_score(x, t)),
// from t_hi down to t_lo. Generic over the scalar so a Dual strength carries
// d x_t / d omega through both stages.
template <class Model, class S>
VecX<S> heun_step(const DiffusionSchedule& sched, const Model& model, const VecX<S>& x_hi,
                  double t_hi, double t_lo, double y_raw, const S& omega) {
  sched.require_time(t_hi);
  sched.require_time(t_lo);
  if (!(t_lo <= t_hi)) throw ConfigError("heun_step: expects t_lo <= t_hi");
  if (t_lo == t_hi) return x_hi;

  const double dt = t_lo - t_hi;
  const VecX<S> k1 =
      (x_hi + guided_score(model, x_hi, t_hi, y_raw, omega)) * S(-0.5 * sched.beta(t_hi));
  const VecX<S> x_pred = x_hi + k1 * S(dt);
  const VecX<S> k2 =
      (x_pred + guided_score(model, x_pred, t_lo, y_raw, omega)) * S(-0.5 * sched.beta(t_lo));
  VecX<S> out = x_hi + (k1 + k2) * S(0.5 * dt);
  if (!all_finite(out))
    throw NumericError("heun_step: non-finite state stepping to t=" + std::to_string(t_lo));
  return out;
}

// Derivative of the proxy objective J(x_t(omega), t_lo) with respect to the
// strength, by seeding a Dual omega through the tentative solver step, the
// denoising, and the proxy head. Returns {objective, d objective / d omega}.
template <class Model, class Proxy>
std::pair<double, double> omega_objective_derivative(const DiffusionSchedule& sched,
                                                     const Model& model, const Proxy& proxy,
                                                     const VectorXd& x_hi, double t_hi,
                                                     double t_lo, double y_raw, double omega) {
  VecX<Dual> xd(x_hi.size());
  for (Eigen::Index i = 0; i < x_hi.size(); ++i) xd[i] = Dual(x_hi[i], 0.0);
  const Dual w(omega, 1.0);
  const VecX<Dual> x_lo = heun_step(sched, model, xd, t_hi, t_lo, y_raw, w);
  const Dual j = proxy_at_time_scaled(proxy, sched, model, x_lo, t_lo);
  return {j.value, j.tangent};
}

// k_omega ascent steps on the strength. A non-finite derivative keeps the
// previous strength and flags the step.
template <class Model, class Proxy>
double optimize_omega(const DiffusionSchedule& sched, const Model& model, const Proxy& proxy,
                      const VectorXd& x_hi, double t_hi, double t_lo, const SamplerConfig& cfg,
                      double omega, int* flags = nullptr) {
  for (int k = 0; k < cfg.k_omega; ++k) {
    const auto [j, dj] = omega_objective_derivative(sched, model, proxy, x_hi, t_hi, t_lo,
                                                    cfg.y_cond, omega);
    if (!std::isfinite(dj)) {
      if (flags) ++*flags;
      return omega;
    }
    omega += cfg.eta * dj;
  }
  return omega;
}

inline double cosine_omega(const SamplerConfig& cfg, int step_index) {
  const double u = 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step_index) / cfg.T));
  if (cfg.strategy == Strategy::kCosineIncrease)
    return cfg.cos_lo + (cfg.cos_hi - cfg.cos_lo) * u;
  return cfg.cos_hi + (cfg.cos_lo - cfg.cos_hi) * u;
}

// Gradient of the denoised proxy objective w.r.t. the state, via the
// unconditional score's vector-Jacobian product (used by kDirectGrad).
template <class Model, class Proxy>
VectorXd state_objective_grad(const DiffusionSchedule& sched, const Model& model,
                              const Proxy& proxy, const VectorXd& x, double t) {
  const VectorXd x0 = tweedie_x0(sched, model, x, t);
  const VectorXd u = proxy.grad_x_mean_scaled(x0);
  const VectorXd vjp = model.score_vjp(x, t, std::nullopt, u);
  return (u + sched.variance(t) * vjp) / sched.mean_coeff(t);
}

// One full reverse chain: x_T ~ N(0, I), T solver steps on a uniform grid
// over [t_eps, 1], strength handled per strategy. Deterministic per seed.
template <class Model, class Proxy>
ChainResult sample_chain(const Model& model, const DiffusionSchedule& sched, const Proxy& proxy,
                         const SamplerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int d = model.dim();
  Rng rng(fold_seed({seed, kStreamChain}));

  SamplerState st;
  st.chain_seed = seed;
  st.x = rng.normal_vec(d);
  st.omega = cfg.strategy == Strategy::kCosineIncrease ||
                     cfg.strategy == Strategy::kCosineDecrease
                 ? cosine_omega(cfg, cfg.T - 1)
                 : cfg.omega0;
  st.omega_traj.resize(cfg.T);

  auto grid = [&](int i) {
    return sched.t_eps + (1.0 - sched.t_eps) * static_cast<double>(i) / cfg.T;
  };

  int traj_pos = 0;
  for (int i = cfg.T - 1; i >= 0; --i) {
    const double t_hi = grid(i + 1);
    const double t_lo = grid(i);
    switch (cfg.strategy) {
      case Strategy::kRgd:
        st.omega = optimize_omega(sched, model, proxy, st.x, t_hi, t_lo, cfg, st.omega,
                                  &st.omega_flags);
        break;
      case Strategy::kCosineIncrease:
      case Strategy::kCosineDecrease:
        st.omega = cosine_omega(cfg, i);
        break;
      case Strategy::kFixedOmega:
      case Strategy::kDirectGrad:
        break;
    }
    st.x = heun_step(sched, model, st.x, t_hi, t_lo, cfg.y_cond, st.omega);
    if (cfg.strategy == Strategy::kDirectGrad) {
      st.x += cfg.direct_lr * state_objective_grad(sched, model, proxy, st.x, t_lo);
      if (!st.x.allFinite())
        throw NumericError("direct gradient update produced a non-finite state at t=" +
                           std::to_string(t_lo));
    }
    st.omega_traj[traj_pos++] = st.omega;
    st.t_index = i;
  }

  ChainResult out;
  out.candidate.x0_model = st.x;
  out.candidate.condition = cfg.y_cond;
  out.candidate.final_omega = st.omega;
  out.state = std::move(st);
  return out;
}

struct BatchResult {
  std::vector<std::optional<ChainResult>> chains;  // indexed by chain
  std::vector<std::string> chain_errors;           // empty string = ok
  int failures = 0;

  std::vector<Candidate> candidates() const {
    std::vector<Candidate> out;
    for (const auto& c : chains)
      if (c) out.push_back(c->candidate);
    return out;
  }
};

// Chains i = 0..n-1 run with seeds base_seed + i; the result does not depend
// on worker count or scheduling. A chain failure is recorded per chain; the
// batch fails only when every chain fails.
template <class Model, class Proxy>
BatchResult sample_batch(const Model& model, const DiffusionSchedule& sched, const Proxy& proxy,
                         const SamplerConfig& cfg, int n_chains, std::uint64_t base_seed,
                         int workers) {
  if (n_chains < 1) throw ConfigError("sample_batch needs at least one chain");
  BatchResult res;
  res.chains.resize(static_cast<std::size_t>(n_chains));
  res.chain_errors.resize(static_cast<std::size_t>(n_chains));
  parallel_for(n_chains, workers, [&](int i) {
    try {
      res.chains[static_cast<std::size_t>(i)] =
          sample_chain(model, sched, proxy, cfg, base_seed + static_cast<std::uint64_t>(i));
    } catch (const std::exception& e) {
      res.chain_errors[static_cast<std::size_t>(i)] = e.what();
    }
  });
  for (const auto& e : res.chain_errors)
    if (!e.empty()) ++res.failures;
  if (res.failures == n_chains) throw NumericError("sample_batch: every chain failed");
  return res;
}

}  // namespace rgd
