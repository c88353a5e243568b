// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "reenc/types.hpp"

namespace reenc {

enum class WavEncoding { Pcm16, Float32 };

// Reads 16-bit PCM or 32-bit IEEE float WAV, mono or stereo.
AudioBuffer read_wav(const std::string& path);

// Writes mono/stereo WAV. Float32 is lossless for AudioBuffer contents.
void write_wav(const std::string& path, const AudioBuffer& audio, WavEncoding encoding = WavEncoding::Float32);

}  // namespace reenc
