// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "reenc/model/discriminator.hpp"
#include "reenc/model/f_theta.hpp"
#include "reenc/model/g_phi.hpp"

namespace reenc {

template <typename T>
std::int64_t count_params(FTheta<T>& model) {
  return nn::total_param_count(model.params());
}

template <typename T>
std::int64_t count_params(GPhi<T>& model) {
  return nn::total_param_count(model.params());
}

template <typename T>
std::int64_t count_params(Discriminator<T>& model) {
  return nn::total_param_count(model.params());
}

// Total trainable scalars of a stereo upmix model (trunk + conditioning encoder).
template <typename T>
std::int64_t count_params(FTheta<T>& trunk, GPhi<T>& cond) {
  return count_params(trunk) + count_params(cond);
}

// Analytic forward-pass cost for the predictor trunk. Convolutions and linear
// maps count 2 FLOPs per multiply-accumulate per output position;
// normalizations, activations, and residual adds count 1 FLOP per element.
// Only per-frame work is counted: the conditioned trunk's once-per-sequence
// modulation projection (a few MFLOPs against GFLOPs of trunk work) is
// excluded so the count stays exactly proportional to duration.
double count_flops_per_frame(const ModelSpec& spec);
double count_flops(const ModelSpec& spec, double seconds_of_audio, double frame_rate_hz);

}  // namespace reenc
