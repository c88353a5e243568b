// SPDX-License-Identifier: Apache-2.0
#include "reenc/latent_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace reenc {

namespace {

constexpr char kMagic[4] = {'R', 'E', 'L', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF32 = 0;
constexpr std::size_t kHeaderSize = 40;

void put_u32le(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void put_u64le(std::vector<unsigned char>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void write_impl(const std::string& path, std::uint32_t streams, std::uint32_t channels, std::uint32_t frames,
                double frame_rate_hz, const std::vector<const MatrixF*>& stream_data) {
  std::vector<unsigned char> header;
  header.reserve(kHeaderSize);
  header.insert(header.end(), kMagic, kMagic + 4);
  put_u32le(header, kVersion);
  put_u32le(header, streams);
  put_u32le(header, channels);
  put_u32le(header, frames);
  std::uint64_t rate_bits = 0;
  std::memcpy(&rate_bits, &frame_rate_hz, sizeof(double));
  put_u64le(header, rate_bits);
  put_u32le(header, kDtypeF32);
  put_u64le(header, 0);  // reserved

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_latent_file: cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));

  std::vector<float> row(frames);
  for (const MatrixF* m : stream_data) {
    for (std::uint32_t c = 0; c < channels; ++c) {
      for (std::uint32_t t = 0; t < frames; ++t) row[t] = (*m)(c, t);
      out.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(sizeof(float) * frames));
    }
  }
  if (!out) throw IoError("write_latent_file: write failed for '" + path + "'");
}

}  // namespace

void write_latent_file(const std::string& path, const LatentSequence& latent) {
  write_impl(path, 1, static_cast<std::uint32_t>(latent.channels()), static_cast<std::uint32_t>(latent.frames()),
             latent.frame_rate_hz(), {&latent.data()});
}

void write_latent_file(const std::string& path, const StackedLatent& latent) {
  std::vector<const MatrixF*> ptrs;
  for (int s = 0; s < latent.streams(); ++s) ptrs.push_back(&latent.stream(s));
  write_impl(path, static_cast<std::uint32_t>(latent.streams()), static_cast<std::uint32_t>(latent.channels()),
             static_cast<std::uint32_t>(latent.frames()), latent.frame_rate_hz(), ptrs);
}

AnyLatent read_latent_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_latent_file: cannot open '" + path + "'");

  unsigned char header[kHeaderSize];
  in.read(reinterpret_cast<char*>(header), kHeaderSize);
  if (in.gcount() != static_cast<std::streamsize>(kHeaderSize))
    throw FormatError("read_latent_file: truncated header in '" + path + "'");

  if (std::memcmp(header, kMagic, 4) != 0)
    throw FormatError("read_latent_file: bad magic in '" + path + "' (field: magic)");
  const std::uint32_t version = get_u32le(header + 4);
  if (version != kVersion)
    throw FormatError("read_latent_file: unsupported version " + std::to_string(version) + " (field: version)");
  const std::uint32_t streams = get_u32le(header + 8);
  const std::uint32_t channels = get_u32le(header + 12);
  const std::uint32_t frames = get_u32le(header + 16);
  const std::uint64_t rate_bits = get_u64le(header + 20);
  double frame_rate_hz = 0.0;
  std::memcpy(&frame_rate_hz, &rate_bits, sizeof(double));
  const std::uint32_t dtype = get_u32le(header + 28);

  if (streams < 1 || streams > 2)
    throw FormatError("read_latent_file: streams must be 1 or 2, got " + std::to_string(streams) +
                      " (field: streams)");
  if (channels < 1) throw FormatError("read_latent_file: channels must be positive (field: channels)");
  if (frames < 1) throw FormatError("read_latent_file: frames must be positive (field: frames)");
  if (dtype != kDtypeF32)
    throw FormatError("read_latent_file: unsupported dtype code " + std::to_string(dtype) + " (field: dtype)");

  const std::size_t values_per_stream = static_cast<std::size_t>(channels) * frames;
  std::vector<MatrixF> stream_data;
  std::vector<float> row(frames);
  for (std::uint32_t s = 0; s < streams; ++s) {
    MatrixF m(channels, frames);
    for (std::uint32_t c = 0; c < channels; ++c) {
      in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(sizeof(float) * frames));
      if (in.gcount() != static_cast<std::streamsize>(sizeof(float) * frames))
        throw FormatError("read_latent_file: truncated payload in '" + path + "', expected " +
                          std::to_string(static_cast<std::uint64_t>(streams) * values_per_stream) +
                          " float32 values (field: payload)");
      for (std::uint32_t t = 0; t < frames; ++t) m(c, t) = row[t];
    }
    stream_data.push_back(std::move(m));
  }
  // Trailing bytes mean the header undercounts the payload.
  char extra = 0;
  in.read(&extra, 1);
  if (in.gcount() != 0)
    throw FormatError("read_latent_file: trailing bytes after declared payload (field: payload)");

  if (streams == 1) return LatentSequence(std::move(stream_data[0]), frame_rate_hz);
  return StackedLatent(std::move(stream_data), frame_rate_hz);
}

LatentSequence read_latent_file_mono(const std::string& path) {
  AnyLatent any = read_latent_file(path);
  if (auto* p = std::get_if<LatentSequence>(&any)) return std::move(*p);
  throw FormatError("read_latent_file_mono: '" + path + "' holds a stacked latent, expected a single stream");
}

StackedLatent read_latent_file_stacked(const std::string& path) {
  AnyLatent any = read_latent_file(path);
  if (auto* p = std::get_if<StackedLatent>(&any)) return std::move(*p);
  throw FormatError("read_latent_file_stacked: '" + path + "' holds a single stream, expected a stacked latent");
}

}  // namespace reenc
