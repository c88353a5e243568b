// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reenc/model/specs.hpp"
#include "reenc/nn/core.hpp"
#include "reenc/types.hpp"

namespace reenc {

// Per-task weighting of the loss terms. The BWE recipe uses rec/adv/fm, the
// M2S recipe rec/kl; unused weights are zero in the task defaults.
struct LossWeights {
  double w_rec = 10.0;
  double w_adv = 0.5;
  double w_fm = 1.0;
  double w_kl = 5e-4;

  void validate() const {
    if (w_rec < 0 || w_adv < 0 || w_fm < 0 || w_kl < 0) throw ConfigError("loss weights must be non-negative");
  }

  static LossWeights bwe_defaults() { return LossWeights{10.0, 0.5, 1.0, 0.0}; }
  static LossWeights m2s_defaults() { return LossWeights{10.0, 0.0, 0.0, 5e-4}; }
};

struct LossReport {
  std::vector<std::pair<std::string, double>> terms;  // unweighted values
  double total = 0.0;

  double term(const std::string& name) const {
    for (const auto& [k, v] : terms)
      if (k == name) return v;
    throw ValueError("loss report: no term named '" + name + "'");
  }
  bool has(const std::string& name) const {
    for (const auto& [k, v] : terms)
      if (k == name) return true;
    return false;
  }
};

// total = sum of weight_i * term_i. A term may be absent only if its weight is
// zero; term names are rec, adv, fm, kl.
inline LossReport compose(const std::map<std::string, double>& terms, const LossWeights& weights) {
  weights.validate();
  LossReport report;
  double total = 0.0;
  const std::pair<const char*, double> schedule[] = {
      {"rec", weights.w_rec}, {"adv", weights.w_adv}, {"fm", weights.w_fm}, {"kl", weights.w_kl}};
  for (const auto& [name, w] : schedule) {
    auto it = terms.find(name);
    if (it == terms.end()) {
      if (w != 0.0) throw ValueError(std::string("compose: missing term '") + name + "' with nonzero weight");
      continue;
    }
    if (!std::isfinite(it->second)) throw ValueError(std::string("compose: non-finite term '") + name + "'");
    report.terms.emplace_back(name, it->second);
    total += w * it->second;
  }
  for (const auto& [name, value] : terms)
    if (name != "rec" && name != "adv" && name != "fm" && name != "kl")
      throw ValueError("compose: unknown term '" + name + "'");
  report.total = total;
  return report;
}

// Mean absolute deviation over all elements.
template <typename T>
T rec_loss(const nn::Mat<T>& z_hat, const nn::Mat<T>& z_tgt) {
  if (z_hat.rows() != z_tgt.rows() || z_hat.cols() != z_tgt.cols())
    throw DimensionError("rec_loss: shape mismatch");
  return (z_tgt - z_hat).array().abs().mean();
}

// Value plus gradient w.r.t. z_hat. sign(0) is taken as 0.
template <typename T>
std::pair<T, nn::Mat<T>> rec_loss_grad(const nn::Mat<T>& z_hat, const nn::Mat<T>& z_tgt) {
  const T value = rec_loss(z_hat, z_tgt);
  const T inv_n = T(1) / static_cast<T>(z_hat.size());
  nn::Mat<T> d = (z_hat - z_tgt).unaryExpr([inv_n](T v) {
    return v > T(0) ? inv_n : (v < T(0) ? -inv_n : T(0));
  });
  return {value, std::move(d)};
}

inline float rec_loss(const LatentSequence& z_hat, const LatentSequence& z_tgt) {
  return rec_loss<float>(z_hat.data(), z_tgt.data());
}
inline float rec_loss(const StackedLatent& z_hat, const StackedLatent& z_tgt) {
  if (z_hat.streams() != z_tgt.streams()) throw DimensionError("rec_loss: stream count mismatch");
  return rec_loss<float>(z_hat.as_stacked_matrix(), z_tgt.as_stacked_matrix());
}

// Least-squares generator objective: mean (1 - s)^2 over the score map.
template <typename T>
T gen_adv_loss(const nn::Mat<T>& score_fake) {
  if (!score_fake.allFinite()) throw ValueError("gen_adv_loss: non-finite score map");
  return (T(1) - score_fake.array()).square().mean();
}

template <typename T>
std::pair<T, nn::Mat<T>> gen_adv_loss_grad(const nn::Mat<T>& score_fake) {
  const T value = gen_adv_loss(score_fake);
  const T inv_n = T(1) / static_cast<T>(score_fake.size());
  nn::Mat<T> d = (T(2) * inv_n) * (score_fake.array() - T(1)).matrix();
  return {value, std::move(d)};
}

// Least-squares discriminator objective: mean (1 - s_real)^2 + mean s_fake^2.
template <typename T>
T disc_loss(const nn::Mat<T>& score_real, const nn::Mat<T>& score_fake) {
  if (!score_real.allFinite() || !score_fake.allFinite()) throw ValueError("disc_loss: non-finite score map");
  return (T(1) - score_real.array()).square().mean() + score_fake.array().square().mean();
}

template <typename T>
struct DiscLossGrads {
  T value;
  nn::Mat<T> d_real;
  nn::Mat<T> d_fake;
};

template <typename T>
DiscLossGrads<T> disc_loss_grad(const nn::Mat<T>& score_real, const nn::Mat<T>& score_fake) {
  DiscLossGrads<T> out;
  out.value = disc_loss(score_real, score_fake);
  out.d_real = (T(2) / static_cast<T>(score_real.size())) * (score_real.array() - T(1)).matrix();
  out.d_fake = (T(2) / static_cast<T>(score_fake.size())) * score_fake;
  return out;
}

enum class FmDenominator { Generated, Real };

inline FmDenominator fm_denominator_from_string(const std::string& s) {
  if (s == "generated") return FmDenominator::Generated;
  if (s == "real") return FmDenominator::Real;
  throw ConfigError("fm_denominator must be 'generated' or 'real', got '" + s + "'");
}

// Relative feature matching: per layer, L1 norm of the real/fake difference
// over the L1 norm of the normalizing features (the generated path by
// default, exactly as the objective is stated; 'real' follows the common
// alternative), summed across layers. Floor 1e-8 on the denominator.
template <typename T>
T feature_match_loss(const std::vector<nn::Mat<T>>& features_real,
                     const std::vector<nn::Mat<T>>& features_fake,
                     FmDenominator mode = FmDenominator::Generated) {
  if (features_real.size() != features_fake.size())
    throw DimensionError("feature_match_loss: layer count mismatch");
  T total = T(0);
  for (std::size_t i = 0; i < features_real.size(); ++i) {
    const auto& r = features_real[i];
    const auto& f = features_fake[i];
    if (r.rows() != f.rows() || r.cols() != f.cols())
      throw DimensionError("feature_match_loss: shape mismatch at layer " + std::to_string(i));
    const T num = (r - f).array().abs().sum();
    const T den = (mode == FmDenominator::Generated ? f.array().abs().sum() : r.array().abs().sum()) +
                  static_cast<T>(1e-8);
    total += num / den;
  }
  return total;
}

// Value plus per-layer gradients w.r.t. the fake features. The denominator is
// part of the computation graph, so in 'generated' mode its gradient term is
// included.
template <typename T>
std::pair<T, std::vector<nn::Mat<T>>> feature_match_loss_grad(
    const std::vector<nn::Mat<T>>& features_real, const std::vector<nn::Mat<T>>& features_fake,
    FmDenominator mode = FmDenominator::Generated) {
  if (features_real.size() != features_fake.size())
    throw DimensionError("feature_match_loss: layer count mismatch");
  T total = T(0);
  std::vector<nn::Mat<T>> grads(features_fake.size());
  auto sign = [](T v) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); };
  for (std::size_t i = 0; i < features_real.size(); ++i) {
    const auto& r = features_real[i];
    const auto& f = features_fake[i];
    if (r.rows() != f.rows() || r.cols() != f.cols())
      throw DimensionError("feature_match_loss: shape mismatch at layer " + std::to_string(i));
    const T num = (r - f).array().abs().sum();
    const T den = (mode == FmDenominator::Generated ? f.array().abs().sum() : r.array().abs().sum()) +
                  static_cast<T>(1e-8);
    total += num / den;
    nn::Mat<T> g = (f - r).unaryExpr(sign) / den;
    if (mode == FmDenominator::Generated) g -= (num / (den * den)) * f.unaryExpr(sign);
    grads[i] = std::move(g);
  }
  return {total, std::move(grads)};
}

// KL divergence from N(mu, diag sigma^2) to N(0, I), parameterized by log
// sigma: one half of sum_j (mu_j^2 + exp(2 L_j) - 1 - 2 L_j).
template <typename T>
T kl_loss(const nn::Mat<T>& mu, const nn::Mat<T>& log_sigma) {
  if (mu.rows() != log_sigma.rows() || mu.cols() != log_sigma.cols())
    throw DimensionError("kl_loss: shape mismatch");
  return T(0.5) * (mu.array().square() + (T(2) * log_sigma.array()).exp() - T(1) -
                   T(2) * log_sigma.array())
                      .sum();
}

template <typename T>
struct KlLossGrads {
  T value;
  nn::Mat<T> d_mu;
  nn::Mat<T> d_log_sigma;
};

template <typename T>
KlLossGrads<T> kl_loss_grad(const nn::Mat<T>& mu, const nn::Mat<T>& log_sigma) {
  KlLossGrads<T> out;
  out.value = kl_loss(mu, log_sigma);
  out.d_mu = mu;
  out.d_log_sigma = ((T(2) * log_sigma.array()).exp() - T(1)).matrix();
  return out;
}

inline float kl_loss(const ConditionVector& cond) {
  if (!(cond.sigma.array() > 0.0f).all()) throw ValueError("kl_loss: sigma must be positive");
  Eigen::MatrixXf mu = cond.mu;
  Eigen::MatrixXf log_sigma = cond.sigma.array().log().matrix();
  return kl_loss<float>(mu, log_sigma);
}

}  // namespace reenc
