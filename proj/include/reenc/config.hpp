// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "reenc/error.hpp"
#include "reenc/losses.hpp"

namespace reenc {

enum class Task { Bwe, M2s };

Task task_from_string(const std::string& s);
std::string to_string(Task t);

enum class Precision { Fp32, Reduced };

Precision precision_from_string(const std::string& s);
std::string to_string(Precision p);

// The full training recipe. Field names double as config-file keys.
struct TrainingConfig {
  Task task = Task::Bwe;
  int batch_size = 256;
  double chunk_seconds = 1.4;
  std::int64_t total_steps = 250000;
  double lr_main = 5e-4;
  double lr_disc = 1e-4;
  std::int64_t warmup_main = 1000;
  std::int64_t warmup_disc = 20000;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  Precision precision = Precision::Fp32;
  LossWeights weights = LossWeights::bwe_defaults();

  // Knobs the recipe leaves open.
  std::int64_t adv_delay_steps = 0;   // adversarial terms start at this step
  FmDenominator fm_denominator = FmDenominator::Generated;
  double grad_clip = 0.0;             // 0 disables clipping

  void validate() const;

  static TrainingConfig bwe_defaults();
  static TrainingConfig m2s_defaults();
};

// Flat key=value view of a parsed config file plus CLI overrides. Keys use
// dots for nesting (weights.w_rec). '#' starts a comment; blank lines ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_file(const std::string& path);

// Apply key=value pairs onto a config. Unknown keys and unparsable values
// throw ConfigError naming the key.
void apply_key_values(TrainingConfig& cfg, const KeyValues& kv);

// One "key=value" string, as passed on a command line via --set.
void apply_override(TrainingConfig& cfg, const std::string& assignment);

// Serialization: every field, in a fixed order, parseable by the functions
// above. Round-trips exactly for values written by this function.
std::string config_to_text(const TrainingConfig& cfg);

nlohmann::json config_to_json(const TrainingConfig& cfg);
TrainingConfig config_from_json(const nlohmann::json& j);

}  // namespace reenc
