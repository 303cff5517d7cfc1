#pragma once

#include <cstdint>

#include "rgd/types.hpp"

namespace rgd {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a flat parameter vector.
class AdamState {
 public:
  AdamState() = default;
  AdamState(Eigen::Index n, AdamConfig cfg = {})
      : m_(VectorXd::Zero(n)), v_(VectorXd::Zero(n)), cfg_(cfg) {}

  // Applies one update in place. A non-finite gradient skips the update
  // (recoverable: the skip is counted and reported, parameters untouched).
  bool step(VectorXd& params, const VectorXd& grads);

  std::int64_t steps() const { return step_; }
  std::int64_t skipped() const { return skipped_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  const VectorXd& m() const { return m_; }
  const VectorXd& v() const { return v_; }

  // For resumable training: (m, v, step) fully determine the state.
  VectorXd serialize() const;
  static AdamState deserialize(const VectorXd& raw, AdamConfig cfg);

 private:
  VectorXd m_, v_;
  std::int64_t step_ = 0;
  std::int64_t skipped_ = 0;
  AdamConfig cfg_;
};

}  // namespace rgd
