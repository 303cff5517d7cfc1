#pragma once

#include <cmath>

#include "rgd/errors.hpp"
#include "rgd/types.hpp"

namespace rgd {

// Variance-preserving noise schedule on t in [0, 1]:
//   beta(t)  = beta_min + t (beta_max - beta_min)
//   mean(t)  = exp(-t^2 (beta_max - beta_min)/4 - t beta_min / 2)
//   std(t)   = sqrt(1 - mean(t)^2)
// so mean^2 + std^2 == 1 for every t and the terminal distribution is N(0, I).
struct DiffusionSchedule {
  double beta_min = 0.1;
  double beta_max = 20.0;
  double t_eps = 1e-3;  // training/sampling never goes below this time

  double beta(double t) const { return beta_min + t * (beta_max - beta_min); }
  double beta_integral(double t) const {
    return t * beta_min + 0.5 * t * t * (beta_max - beta_min);
  }
  double mean_coeff(double t) const { return std::exp(-0.5 * beta_integral(t)); }
  double variance(double t) const {
    const double m = mean_coeff(t);
    return 1.0 - m * m;
  }
  double std_dev(double t) const { return std::sqrt(variance(t)); }
  double g2(double t) const { return beta(t); }

  void require_time(double t) const {
    if (!(t >= t_eps - 1e-12 && t <= 1.0 + 1e-12))
      throw ConfigError("time " + std::to_string(t) + " outside [" + std::to_string(t_eps) +
                        ", 1]");
  }
};

// x_t = mean(t) x0 + std(t) eps, with eps standard normal from the caller.
inline VectorXd perturb(const DiffusionSchedule& sched, const VectorXd& x0, double t,
                        const VectorXd& eps) {
  sched.require_time(t);
  if (x0.size() != eps.size()) throw ConfigError("perturb: noise shape mismatch");
  return sched.mean_coeff(t) * x0 + sched.std_dev(t) * eps;
}

}  // namespace rgd
