// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reenc/metrics.hpp"

namespace reenc {

// One table row. BWE-style rows carry banded values, M2S-style rows carry
// stereo quadruples; the processing-cost column is present only for rows that
// run the latent module.
struct EvalRow {
  std::string label;
  std::optional<BandedMetrics> banded;
  std::optional<StereoMetrics> stereo;
  std::optional<double> gflops_per_audio_second;
};

struct EvalReport {
  std::string title;
  nlohmann::json provenance = nlohmann::json::object();  // configs, seeds, hashes
  std::vector<EvalRow> rows;

  void validate() const;  // every scalar finite
};

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

void save_report(const EvalReport& r, const std::string& path);
EvalReport load_report(const std::string& path);

// Plain-text table: banded metrics rendered as "full (low / high)", stereo
// metrics as "L / R" and "M / S" column pairs.
std::string render_report_table(const EvalReport& r);

}  // namespace reenc
