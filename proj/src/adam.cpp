#include "rgd/adam.hpp"

#include <cmath>
#include <cstdio>

#include "rgd/errors.hpp"

namespace rgd {

bool AdamState::step(VectorXd& params, const VectorXd& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ConfigError("adam shape mismatch");
  if (!grads.allFinite()) {
    ++skipped_;
    std::fprintf(stderr, "warning: non-finite gradient at adam step %lld, update skipped\n",
                 static_cast<long long>(step_ + 1));
    return false;
  }
  ++step_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grads;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  params.array() -=
      cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
  return true;
}

VectorXd AdamState::serialize() const {
  VectorXd raw(2 * m_.size() + 1);
  raw.segment(0, m_.size()) = m_;
  raw.segment(m_.size(), v_.size()) = v_;
  raw[raw.size() - 1] = static_cast<double>(step_);
  return raw;
}

AdamState AdamState::deserialize(const VectorXd& raw, AdamConfig cfg) {
  if (raw.size() % 2 != 1) throw ConfigError("bad adam state blob");
  const Eigen::Index n = (raw.size() - 1) / 2;
  AdamState st(n, cfg);
  st.m_ = raw.segment(0, n);
  st.v_ = raw.segment(n, n);
  st.step_ = static_cast<std::int64_t>(raw[raw.size() - 1]);
  return st;
}

}  // namespace rgd
