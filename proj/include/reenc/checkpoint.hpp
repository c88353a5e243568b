// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reenc/error.hpp"
#include "reenc/nn/adamw.hpp"
#include "reenc/nn/core.hpp"
#include "reenc/rng.hpp"

namespace reenc {

// One tensor in the container. Payload is little-endian, column-major,
// matching Eigen's in-memory layout on every platform we target.
struct NamedArray {
  std::string name;
  std::uint8_t dtype = 0;  // 0 = float32, 1 = float64
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::vector<std::uint8_t> bytes;
};

// Versioned container: JSON metadata block (sorted keys, so the encoding is a
// pure function of content) followed by a named-array table. save -> load ->
// save round-trips byte-identically because both halves re-serialize
// canonically.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray* find(std::string_view name) const;

  template <typename T>
  void add(const std::string& name, const nn::Mat<T>& m);
  template <typename T>
  void read_into(std::string_view name, nn::Mat<T>& m) const;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Human-readable listing: metadata, then one line per array.
std::string checkpoint_manifest(const Checkpoint& ck);

// FNV-1a over the serialized bytes; stable content identity for reports.
std::string checkpoint_hash(const Checkpoint& ck);

// ---- parameter/optimizer shuttling ----

template <typename T>
void pack_params(Checkpoint& ck, const std::vector<nn::ParamRef<T>>& params) {
  for (const auto& p : params) ck.add(p.name, *p.v);
}

// Strict: every parameter must be present with matching shape and dtype.
template <typename T>
void unpack_params(const Checkpoint& ck, const std::vector<nn::ParamRef<T>>& params) {
  for (const auto& p : params) ck.read_into(p.name, *p.v);
}

template <typename T>
void pack_adamw(Checkpoint& ck, const std::string& prefix, nn::AdamW<T>& opt,
                const std::vector<nn::ParamRef<T>>& params) {
  ck.meta["optim"][prefix]["step_count"] = opt.step_count();
  auto& slots = opt.slots();
  if (slots.empty()) return;  // nothing accumulated yet
  if (slots.size() != params.size())
    throw ArtifactError("checkpoint: optimizer slot count does not match parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    ck.add(prefix + ".m." + params[i].name, slots[i].m);
    ck.add(prefix + ".v." + params[i].name, slots[i].v);
  }
}

template <typename T>
void unpack_adamw(const Checkpoint& ck, const std::string& prefix, nn::AdamW<T>& opt,
                  const std::vector<nn::ParamRef<T>>& params) {
  const auto& optim = ck.meta.at("optim").at(prefix);
  const auto t = optim.at("step_count").get<std::int64_t>();
  opt.set_step_count(t);
  auto& slots = opt.slots();
  slots.clear();
  if (t == 0) return;
  slots.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    ck.read_into(prefix + ".m." + params[i].name, slots[i].m);
    ck.read_into(prefix + ".v." + params[i].name, slots[i].v);
  }
}

// RNG state as hex words: JSON numbers cannot hold full 64-bit values.
nlohmann::json rng_state_json(const Rng& rng);
Rng rng_from_json(const nlohmann::json& j);

}  // namespace reenc
