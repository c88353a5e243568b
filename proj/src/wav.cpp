// SPDX-License-Identifier: Apache-2.0
#include "reenc/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace reenc {

namespace {

struct ByteWriter {
  std::vector<unsigned char> buf;
  void bytes(const char* p, std::size_t n) { buf.insert(buf.end(), p, p + n); }
  void u16(std::uint16_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xff));
    buf.push_back(static_cast<unsigned char>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  }
};

std::uint16_t get_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

AudioBuffer read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_wav: cannot open '" + path + "'");
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 || std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw FormatError("read_wav: '" + path + "' is not a RIFF/WAVE file");

  std::uint16_t format = 0, num_channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* payload = nullptr;
  std::uint32_t payload_size = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const char* id = reinterpret_cast<const char*>(data.data() + pos);
    const std::uint32_t chunk_size = get_u32le(data.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + chunk_size > data.size())
      throw FormatError("read_wav: truncated chunk '" + std::string(id, 4) + "' in '" + path + "'");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError("read_wav: fmt chunk too small");
      format = get_u16le(data.data() + body);
      num_channels = get_u16le(data.data() + body + 2);
      sample_rate = get_u32le(data.data() + body + 4);
      bits = get_u16le(data.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      payload = data.data() + body;
      payload_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || payload == nullptr) throw FormatError("read_wav: missing fmt or data chunk in '" + path + "'");
  if (format != 1 && format != 3)
    throw FormatError("read_wav: unsupported format tag " + std::to_string(format) + " (want PCM or IEEE float)");
  if (format == 1 && bits != 16) throw FormatError("read_wav: PCM must be 16-bit, got " + std::to_string(bits));
  if (format == 3 && bits != 32) throw FormatError("read_wav: float must be 32-bit, got " + std::to_string(bits));
  if (num_channels < 1 || num_channels > 2)
    throw FormatError("read_wav: channels must be 1 or 2, got " + std::to_string(num_channels));

  const std::uint32_t bytes_per_sample = bits / 8;
  const std::uint32_t frame_size = bytes_per_sample * num_channels;
  if (frame_size == 0 || payload_size % frame_size != 0)
    throw FormatError("read_wav: data chunk size not a multiple of the frame size");
  const std::uint32_t num_frames = payload_size / frame_size;
  if (num_frames == 0) throw FormatError("read_wav: empty data chunk");

  MatrixF samples(num_channels, num_frames);
  for (std::uint32_t t = 0; t < num_frames; ++t) {
    for (std::uint16_t c = 0; c < num_channels; ++c) {
      const unsigned char* p = payload + (static_cast<std::size_t>(t) * num_channels + c) * bytes_per_sample;
      if (format == 1) {
        const std::int16_t v = static_cast<std::int16_t>(get_u16le(p));
        samples(c, t) = static_cast<float>(v) / 32768.0f;
      } else {
        float v = 0.0f;
        std::uint32_t bits32 = get_u32le(p);
        std::memcpy(&v, &bits32, sizeof(float));
        samples(c, t) = v;
      }
    }
  }
  return AudioBuffer(std::move(samples), static_cast<int>(sample_rate));
}

void write_wav(const std::string& path, const AudioBuffer& audio, WavEncoding encoding) {
  const int channels = audio.channels();
  const std::int64_t frames = audio.length();
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::Pcm16 ? 1 : 3;
  const std::uint32_t byte_rate =
      static_cast<std::uint32_t>(audio.sample_rate_hz()) * channels * (bits / 8);
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * (bits / 8));
  const std::uint32_t data_size = static_cast<std::uint32_t>(frames * block_align);

  ByteWriter w;
  w.bytes("RIFF", 4);
  const bool fact = format == 3;  // fact chunk is expected for non-PCM
  const std::uint32_t riff_size = 4 + (8 + 16) + (fact ? 12 : 0) + 8 + data_size;
  w.u32(riff_size);
  w.bytes("WAVE", 4);
  w.bytes("fmt ", 4);
  w.u32(16);
  w.u16(format);
  w.u16(static_cast<std::uint16_t>(channels));
  w.u32(static_cast<std::uint32_t>(audio.sample_rate_hz()));
  w.u32(byte_rate);
  w.u16(block_align);
  w.u16(bits);
  if (fact) {
    w.bytes("fact", 4);
    w.u32(4);
    w.u32(static_cast<std::uint32_t>(frames));
  }
  w.bytes("data", 4);
  w.u32(data_size);

  const MatrixF& s = audio.samples();
  for (std::int64_t t = 0; t < frames; ++t) {
    for (int c = 0; c < channels; ++c) {
      if (encoding == WavEncoding::Pcm16) {
        const float clamped = std::clamp(s(c, t), -1.0f, 1.0f);
        const std::int16_t v = static_cast<std::int16_t>(std::lround(clamped * 32767.0f));
        w.u16(static_cast<std::uint16_t>(v));
      } else {
        std::uint32_t bits32 = 0;
        const float v = s(c, t);
        std::memcpy(&bits32, &v, sizeof(float));
        w.u32(bits32);
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_wav: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(w.buf.data()), static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw IoError("write_wav: write failed for '" + path + "'");
}

}  // namespace reenc
