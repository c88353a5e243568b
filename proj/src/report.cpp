// SPDX-License-Identifier: Apache-2.0
#include "reenc/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace reenc {

namespace {

void check_finite(double v, const std::string& where) {
  if (!std::isfinite(v)) throw ValueError("report: non-finite value in " + where);
}

nlohmann::json banded_to_json(const BandedMetrics& b) {
  return {{"stft_d", {{"full", b.stft_d.full}, {"low", b.stft_d.low}, {"high", b.stft_d.high}}},
          {"mel_d", {{"full", b.mel_d.full}, {"low", b.mel_d.low}, {"high", b.mel_d.high}}}};
}

BandedMetrics banded_from_json(const nlohmann::json& j) {
  BandedMetrics b;
  b.stft_d = {j.at("stft_d").at("full").get<double>(), j.at("stft_d").at("low").get<double>(),
              j.at("stft_d").at("high").get<double>()};
  b.mel_d = {j.at("mel_d").at("full").get<double>(), j.at("mel_d").at("low").get<double>(),
             j.at("mel_d").at("high").get<double>()};
  return b;
}

nlohmann::json stereo_to_json(const StereoMetrics& s) {
  return {{"stft_d",
           {{"left", s.stft_d.left}, {"right", s.stft_d.right}, {"mid", s.stft_d.mid}, {"side", s.stft_d.side}}},
          {"mel_d",
           {{"left", s.mel_d.left}, {"right", s.mel_d.right}, {"mid", s.mel_d.mid}, {"side", s.mel_d.side}}}};
}

StereoMetrics stereo_from_json(const nlohmann::json& j) {
  StereoMetrics s;
  const auto& sd = j.at("stft_d");
  const auto& md = j.at("mel_d");
  s.stft_d = {sd.at("left").get<double>(), sd.at("right").get<double>(), sd.at("mid").get<double>(),
              sd.at("side").get<double>()};
  s.mel_d = {md.at("left").get<double>(), md.at("right").get<double>(), md.at("mid").get<double>(),
             md.at("side").get<double>()};
  return s;
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << v;
  return out.str();
}

}  // namespace

void EvalReport::validate() const {
  for (const auto& row : rows) {
    if (row.banded) {
      for (const double v : {row.banded->stft_d.full, row.banded->stft_d.low, row.banded->stft_d.high,
                             row.banded->mel_d.full, row.banded->mel_d.low, row.banded->mel_d.high})
        check_finite(v, "row '" + row.label + "'");
    }
    if (row.stereo) {
      for (const double v : {row.stereo->stft_d.left, row.stereo->stft_d.right, row.stereo->stft_d.mid,
                             row.stereo->stft_d.side, row.stereo->mel_d.left, row.stereo->mel_d.right,
                             row.stereo->mel_d.mid, row.stereo->mel_d.side})
        check_finite(v, "row '" + row.label + "'");
    }
    if (row.gflops_per_audio_second) check_finite(*row.gflops_per_audio_second, "row '" + row.label + "'");
  }
}

nlohmann::json report_to_json(const EvalReport& r) {
  r.validate();
  nlohmann::json j;
  j["title"] = r.title;
  j["provenance"] = r.provenance;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json rj;
    rj["label"] = row.label;
    if (row.banded) rj["banded"] = banded_to_json(*row.banded);
    if (row.stereo) rj["stereo"] = stereo_to_json(*row.stereo);
    if (row.gflops_per_audio_second) rj["gflops_per_audio_second"] = *row.gflops_per_audio_second;
    j["rows"].push_back(std::move(rj));
  }
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.title = j.at("title").get<std::string>();
  r.provenance = j.at("provenance");
  for (const auto& rj : j.at("rows")) {
    EvalRow row;
    row.label = rj.at("label").get<std::string>();
    if (rj.contains("banded")) row.banded = banded_from_json(rj.at("banded"));
    if (rj.contains("stereo")) row.stereo = stereo_from_json(rj.at("stereo"));
    if (rj.contains("gflops_per_audio_second"))
      row.gflops_per_audio_second = rj.at("gflops_per_audio_second").get<double>();
    r.rows.push_back(std::move(row));
  }
  r.validate();
  return r;
}

void save_report(const EvalReport& r, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("report: cannot open '" + path + "' for writing");
  f << report_to_json(r).dump(2) << "\n";
  if (!f) throw IoError("report: short write to '" + path + "'");
}

EvalReport load_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("report: cannot open '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded()) throw FormatError("report: '" + path + "' is not valid JSON");
  return report_from_json(j);
}

std::string render_report_table(const EvalReport& r) {
  r.validate();
  std::ostringstream out;
  out << r.title << "\n";
  const bool any_banded = std::any_of(r.rows.begin(), r.rows.end(), [](const EvalRow& x) { return x.banded.has_value(); });
  const bool any_stereo = std::any_of(r.rows.begin(), r.rows.end(), [](const EvalRow& x) { return x.stereo.has_value(); });

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"row"};
  if (any_banded) {
    header.push_back("STFT-D full (low / high)");
    header.push_back("mel-D full (low / high)");
  }
  if (any_stereo) {
    header.push_back("STFT-D L / R");
    header.push_back("STFT-D M / S");
    header.push_back("mel-D L / R");
    header.push_back("mel-D M / S");
  }
  header.push_back("GFLOPs/s");
  cells.push_back(header);

  for (const auto& row : r.rows) {
    std::vector<std::string> line{row.label};
    if (any_banded) {
      if (row.banded) {
        line.push_back(fmt(row.banded->stft_d.full) + " (" + fmt(row.banded->stft_d.low) + " / " +
                       fmt(row.banded->stft_d.high) + ")");
        line.push_back(fmt(row.banded->mel_d.full) + " (" + fmt(row.banded->mel_d.low) + " / " +
                       fmt(row.banded->mel_d.high) + ")");
      } else {
        line.insert(line.end(), {"-", "-"});
      }
    }
    if (any_stereo) {
      if (row.stereo) {
        line.push_back(fmt(row.stereo->stft_d.left) + " / " + fmt(row.stereo->stft_d.right));
        line.push_back(fmt(row.stereo->stft_d.mid) + " / " + fmt(row.stereo->stft_d.side));
        line.push_back(fmt(row.stereo->mel_d.left) + " / " + fmt(row.stereo->mel_d.right));
        line.push_back(fmt(row.stereo->mel_d.mid) + " / " + fmt(row.stereo->mel_d.side));
      } else {
        line.insert(line.end(), {"-", "-", "-", "-"});
      }
    }
    line.push_back(row.gflops_per_audio_second ? fmt(*row.gflops_per_audio_second) : "-");
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& line : cells)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  for (std::size_t li = 0; li < cells.size(); ++li) {
    for (std::size_t c = 0; c < cells[li].size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c]) + 2) << cells[li][c];
    }
    out << "\n";
    if (li == 0) {
      std::size_t total = 0;
      for (const auto w : width) total += w + 2;
      out << std::string(total, '-') << "\n";
    }
  }
  return out.str();
}

}  // namespace reenc
