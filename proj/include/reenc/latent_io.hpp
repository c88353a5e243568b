// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <variant>

#include "reenc/types.hpp"

namespace reenc {

// RELT latent file format, version 1.
//
// Fixed 40-byte little-endian header followed by a row-major float32 payload:
//   offset  size  field
//   0       4     magic "RELT"
//   4       4     u32 version (1)
//   8       4     u32 streams
//   12      4     u32 channels
//   16      4     u32 frames
//   20      8     f64 frame_rate_hz
//   28      4     u32 dtype (0 = float32)
//   32      8     reserved (zero)
// Payload order: stream-major, then channel, then frame.
// Round-trips are bit-exact for float32 data.

using AnyLatent = std::variant<LatentSequence, StackedLatent>;

void write_latent_file(const std::string& path, const LatentSequence& latent);
void write_latent_file(const std::string& path, const StackedLatent& latent);
AnyLatent read_latent_file(const std::string& path);

// Convenience for call sites that know what they expect.
LatentSequence read_latent_file_mono(const std::string& path);
StackedLatent read_latent_file_stacked(const std::string& path);

}  // namespace reenc
