#pragma once

#include <Eigen/Dense>

#include "rgd/dual.hpp"

namespace rgd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
bool all_finite(const VecX<Scalar>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!isfinite(v[i])) return false;
  }
  return true;
}

}  // namespace rgd
