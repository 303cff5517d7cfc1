#pragma once

#include <cstdint>
#include <vector>

#include "rgd/errors.hpp"
#include "rgd/types.hpp"

namespace rgd {

enum class Activation { kIdentity, kSilu };

// silu(x) = x * logistic(x); smooth everywhere, so input gradients of
// anything built on top stay well defined.
template <class S>
S silu(const S& x) {
  using std::exp;
  return x / (S(1.0) + exp(-x));
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double silu_prime(double x) {
  const double s = logistic(x);
  return s * (1.0 + x * (1.0 - s));
}

// Dense multilayer perceptron over float64. Parameters live in one flat
// vector (per layer: weight matrix column-major, then bias), which is also
// the checkpoint and optimizer layout. Immutable during inference; concurrent
// read-only evaluation is safe.
class Mlp {
 public:
  struct LayerSpec {
    Eigen::Index in = 0;
    Eigen::Index out = 0;
    Eigen::Index w_off = 0;
    Eigen::Index b_off = 0;
    Activation act = Activation::kIdentity;
  };

  // Intermediate activations kept by a forward pass for the reverse sweep.
  struct Cache {
    std::vector<MatrixXd> inputs;  // per layer: incoming activations
    std::vector<MatrixXd> pre;     // per layer: pre-activation values
  };

  Mlp() = default;

  // dims = {input, hidden..., output}; hidden layers get `hidden_act`,
  // the output layer is linear. Weights are Glorot-uniform, biases zero.
  Mlp(const std::vector<Eigen::Index>& dims, Activation hidden_act, std::uint64_t seed);

  Eigen::Index input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  Eigen::Index output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  Eigen::Index param_count() const { return params_.size(); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::vector<Eigen::Index> layer_dims() const;
  Activation hidden_activation() const { return hidden_act_; }
  std::uint64_t creation_seed() const { return creation_seed_; }

  const VectorXd& params() const { return params_; }
  VectorXd& mutable_params() { return params_; }
  void set_params(const VectorXd& p);

  Eigen::Map<const MatrixXd> weight(std::size_t i) const {
    const auto& l = layers_[i];
    return {params_.data() + l.w_off, l.out, l.in};
  }
  Eigen::Map<const VectorXd> bias(std::size_t i) const {
    const auto& l = layers_[i];
    return {params_.data() + l.b_off, l.out};
  }
  Eigen::Map<MatrixXd> mutable_weight(std::size_t i) {
    const auto& l = layers_[i];
    return {params_.data() + l.w_off, l.out, l.in};
  }
  Eigen::Map<VectorXd> mutable_bias(std::size_t i) {
    const auto& l = layers_[i];
    return {params_.data() + l.b_off, l.out};
  }

  // Generic forward pass; Scalar is double or Dual. The Dual instantiation
  // carries one directional derivative through the whole evaluation.
  template <class S>
  VecX<S> forward(const VecX<S>& x) const;

  // Columns are samples.
  MatrixXd forward_batch(const MatrixXd& X) const;
  MatrixXd forward_batch(const MatrixXd& X, Cache& cache) const;

  // Reverse mode: gradients of <cotangents, forward(X)> summed over the
  // batch. Writes flat parameter gradients (same layout as params()) and
  // returns the gradient w.r.t. the inputs.
  MatrixXd backward_batch(const Cache& cache, const MatrixXd& cotangents,
                          VectorXd& param_grads) const;

  // Single-sample conveniences.
  VectorXd operator()(const VectorXd& x) const { return forward_batch(x); }
  VectorXd backward(const VectorXd& x, const VectorXd& cotangent, VectorXd& param_grads) const;

  // Forward mode via Dual arithmetic: exact directional derivative along v.
  std::pair<VectorXd, VectorXd> jvp(const VectorXd& x, const VectorXd& v) const;

  // Forward mode with a batch of tangent directions (columns of V), carried
  // through in plain float64 matrix arithmetic. Returns {value, J*V}.
  std::pair<VectorXd, MatrixXd> tangent_batch(const VectorXd& x, const MatrixXd& V) const;

 private:
  void check_input(Eigen::Index rows) const;

  VectorXd params_;
  std::vector<LayerSpec> layers_;
  Activation hidden_act_ = Activation::kSilu;
  std::uint64_t creation_seed_ = 0;
};

template <class S>
VecX<S> Mlp::forward(const VecX<S>& x) const {
  check_input(x.size());
  VecX<S> a = x;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    const auto W = weight(li);
    const auto b = bias(li);
    VecX<S> z(l.out);
    for (Eigen::Index i = 0; i < l.out; ++i) {
      S acc = S(b[i]);
      for (Eigen::Index j = 0; j < l.in; ++j) acc += S(W(i, j)) * a[j];
      z[i] = l.act == Activation::kSilu ? silu(acc) : acc;
    }
    a = std::move(z);
  }
  return a;
}

template <>
inline VecX<double> Mlp::forward<double>(const VecX<double>& x) const {
  return forward_batch(x);
}

}  // namespace rgd
