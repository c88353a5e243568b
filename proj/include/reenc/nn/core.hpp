// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "reenc/error.hpp"
#include "reenc/rng.hpp"

namespace reenc::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// A trainable array plus its gradient accumulator.
template <typename T>
struct Param {
  Mat<T> v;
  Mat<T> g;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    v.setZero(rows, cols);
    g.setZero(rows, cols);
  }
  Eigen::Index count() const { return v.size(); }
};

// Borrowed view used by optimizers, checkpoints, and gradient probes.
template <typename T>
struct ParamRef {
  std::string name;
  Mat<T>* v;
  Mat<T>* g;
};

template <typename T>
inline void collect_param(const std::string& name, Param<T>& p, std::vector<ParamRef<T>>& out) {
  out.push_back(ParamRef<T>{name, &p.v, &p.g});
}

template <typename T>
inline void zero_grads(std::vector<ParamRef<T>>& params) {
  for (auto& p : params) p.g->setZero();
}

template <typename T>
inline std::int64_t total_param_count(const std::vector<ParamRef<T>>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += static_cast<std::int64_t>(p.v->size());
  return n;
}

template <typename T>
inline void fill_gauss(Mat<T>& m, Rng& rng, double stddev) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(stddev * rng.gauss());
}

}  // namespace reenc::nn
