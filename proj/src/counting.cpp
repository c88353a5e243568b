// SPDX-License-Identifier: Apache-2.0
#include "reenc/counting.hpp"

#include <cmath>

namespace reenc {

double count_flops_per_frame(const ModelSpec& spec) {
  spec.validate();
  const double h = spec.hidden_dim;
  const double e = spec.expansion;
  double per_frame = 2.0 * h * spec.latent_channels_in;  // input projection
  double block = 2.0 * h * spec.dw_kernel;               // depthwise conv
  block += h;                                            // layer norm
  if (spec.conditioned) block += 2.0 * h;                // modulation scale + shift
  block += 2.0 * (e * h) * h;                            // expansion
  block += e * h;                                        // GELU
  block += e * h;                                        // GRN
  block += 2.0 * h * (e * h);                            // projection
  block += h;                                            // residual add
  per_frame += spec.num_blocks * block;
  per_frame += 2.0 * (spec.output_streams * spec.latent_channels_out) * h;  // output projection
  return per_frame;
}

double count_flops(const ModelSpec& spec, double seconds_of_audio, double frame_rate_hz) {
  if (!(seconds_of_audio > 0.0)) throw ValueError("count_flops: duration must be positive");
  if (!(frame_rate_hz > 0.0)) throw ValueError("count_flops: frame rate must be positive");
  // Fractional frames keep the count exactly linear in duration.
  return count_flops_per_frame(spec) * seconds_of_audio * frame_rate_hz;
}

}  // namespace reenc
