// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "reenc/nn/core.hpp"

namespace reenc::nn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// Decoupled weight decay Adam. Moment slots are allocated lazily on the first
// step and addressed by position, so the parameter list must be stable.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  void step(std::vector<ParamRef<T>>& params, double lr) {
    if (slots_.empty()) {
      slots_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        slots_[i].m = Mat<T>::Zero(params[i].v->rows(), params[i].v->cols());
        slots_[i].v = Mat<T>::Zero(params[i].v->rows(), params[i].v->cols());
      }
    }
    if (slots_.size() != params.size()) throw DimensionError("adamw: parameter list changed size");
    ++t_;
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T bc1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    const T bc2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& s = slots_[i];
      const Mat<T>& g = *params[i].g;
      Mat<T>& p = *params[i].v;
      s.m = b1 * s.m + (T(1) - b1) * g;
      s.v = b2 * s.v + (T(1) - b2) * g.cwiseProduct(g);
      const auto mhat = (s.m / bc1).eval();
      const auto vhat = (s.v / bc2).eval();
      p.array() -= static_cast<T>(lr) *
                   (mhat.array() / (vhat.array().sqrt() + static_cast<T>(cfg_.eps)) +
                    static_cast<T>(cfg_.weight_decay) * p.array());
    }
  }

  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }

  struct Slot {
    Mat<T> m, v;
  };
  std::vector<Slot>& slots() { return slots_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  std::vector<Slot> slots_;
  std::int64_t t_ = 0;
};

}  // namespace reenc::nn
