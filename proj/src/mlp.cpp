#include "rgd/mlp.hpp"

#include <cmath>

#include "rgd/rng.hpp"

namespace rgd {

Mlp::Mlp(const std::vector<Eigen::Index>& dims, Activation hidden_act, std::uint64_t seed)
    : hidden_act_(hidden_act), creation_seed_(seed) {
  if (dims.size() < 2) throw ConfigError("mlp needs at least input and output dims");
  Eigen::Index total = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] <= 0 || dims[i + 1] <= 0) throw ConfigError("mlp dims must be positive");
    LayerSpec l;
    l.in = dims[i];
    l.out = dims[i + 1];
    l.w_off = total;
    l.b_off = total + l.in * l.out;
    l.act = (i + 2 < dims.size()) ? hidden_act : Activation::kIdentity;
    total = l.b_off + l.out;
    layers_.push_back(l);
  }
  params_ = VectorXd::Zero(total);
  Rng rng(fold_seed({seed, kStreamInit}));
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    auto W = mutable_weight(li);
    for (Eigen::Index c = 0; c < l.in; ++c)
      for (Eigen::Index r = 0; r < l.out; ++r) W(r, c) = rng.uniform_in(-bound, bound);
    // biases stay zero
  }
}

std::vector<Eigen::Index> Mlp::layer_dims() const {
  std::vector<Eigen::Index> dims;
  if (layers_.empty()) return dims;
  dims.push_back(layers_.front().in);
  for (const auto& l : layers_) dims.push_back(l.out);
  return dims;
}

void Mlp::set_params(const VectorXd& p) {
  if (p.size() != params_.size()) throw ConfigError("parameter vector size mismatch");
  params_ = p;
}

void Mlp::check_input(Eigen::Index rows) const {
  if (layers_.empty()) throw ConfigError("uninitialized mlp");
  if (rows != layers_.front().in) throw ConfigError("mlp input dimension mismatch");
}

MatrixXd Mlp::forward_batch(const MatrixXd& X) const {
  check_input(X.rows());
  MatrixXd a = X;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    MatrixXd z = (weight(li) * a).colwise() + bias(li);
    if (l.act == Activation::kSilu)
      a = z.unaryExpr([](double v) { return silu(v); });
    else
      a = std::move(z);
  }
  return a;
}

MatrixXd Mlp::forward_batch(const MatrixXd& X, Cache& cache) const {
  check_input(X.rows());
  cache.inputs.assign(layers_.size(), {});
  cache.pre.assign(layers_.size(), {});
  MatrixXd a = X;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    cache.inputs[li] = a;
    MatrixXd z = (weight(li) * a).colwise() + bias(li);
    cache.pre[li] = z;
    if (l.act == Activation::kSilu)
      a = z.unaryExpr([](double v) { return silu(v); });
    else
      a = std::move(z);
  }
  return a;
}

MatrixXd Mlp::backward_batch(const Cache& cache, const MatrixXd& cotangents,
                             VectorXd& param_grads) const {
  if (cache.inputs.size() != layers_.size()) throw ConfigError("backward without forward cache");
  if (cotangents.rows() != output_dim()) throw ConfigError("cotangent dimension mismatch");
  if (param_grads.size() != params_.size()) param_grads = VectorXd::Zero(params_.size());
  MatrixXd delta = cotangents;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    if (l.act == Activation::kSilu)
      delta.array() *= cache.pre[li].unaryExpr([](double v) { return silu_prime(v); }).array();
    Eigen::Map<MatrixXd> dW(param_grads.data() + l.w_off, l.out, l.in);
    Eigen::Map<VectorXd> db(param_grads.data() + l.b_off, l.out);
    dW.noalias() = delta * cache.inputs[li].transpose();
    db.noalias() = delta.rowwise().sum();
    if (li > 0) delta = weight(li).transpose() * delta;
  }
  return weight(0).transpose() * delta;
}

VectorXd Mlp::backward(const VectorXd& x, const VectorXd& cotangent,
                       VectorXd& param_grads) const {
  Cache cache;
  forward_batch(x, cache);
  return backward_batch(cache, cotangent, param_grads);
}

std::pair<VectorXd, VectorXd> Mlp::jvp(const VectorXd& x, const VectorXd& v) const {
  if (x.size() != v.size()) throw ConfigError("jvp tangent dimension mismatch");
  VecX<Dual> in(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) in[i] = Dual(x[i], v[i]);
  const VecX<Dual> out = forward(in);
  VectorXd value(out.size()), tangent(out.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    value[i] = out[i].value;
    tangent[i] = out[i].tangent;
  }
  return {std::move(value), std::move(tangent)};
}

std::pair<VectorXd, MatrixXd> Mlp::tangent_batch(const VectorXd& x, const MatrixXd& V) const {
  check_input(x.size());
  if (V.rows() != x.size()) throw ConfigError("tangent rows must match input dim");
  VectorXd a = x;
  MatrixXd T = V;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    VectorXd z = weight(li) * a + bias(li);
    T = weight(li) * T;
    if (l.act == Activation::kSilu) {
      T.array().colwise() *= z.unaryExpr([](double v) { return silu_prime(v); }).array();
      a = z.unaryExpr([](double v) { return silu(v); });
    } else {
      a = std::move(z);
    }
  }
  return {std::move(a), std::move(T)};
}

}  // namespace rgd
