// SPDX-License-Identifier: Apache-2.0
#include "reenc/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace reenc {

Task task_from_string(const std::string& s) {
  if (s == "bwe") return Task::Bwe;
  if (s == "m2s") return Task::M2s;
  throw ConfigError("unknown task '" + s + "' (expected bwe or m2s)");
}

std::string to_string(Task t) { return t == Task::Bwe ? "bwe" : "m2s"; }

Precision precision_from_string(const std::string& s) {
  if (s == "fp32") return Precision::Fp32;
  if (s == "reduced") return Precision::Reduced;
  throw ConfigError("unknown precision '" + s + "' (expected fp32 or reduced)");
}

std::string to_string(Precision p) { return p == Precision::Fp32 ? "fp32" : "reduced"; }

void TrainingConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (chunk_seconds <= 0) throw ConfigError("chunk_seconds must be positive");
  if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
  if (warmup_main > total_steps || warmup_disc > total_steps)
    throw ConfigError("warmup steps must not exceed total_steps");
  if (warmup_main < 1 || warmup_disc < 1) throw ConfigError("warmup steps must be >= 1");
  if (lr_main <= 0 || lr_disc <= 0) throw ConfigError("learning rates must be positive");
  if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  if (grad_clip < 0) throw ConfigError("grad_clip must be non-negative");
  if (adv_delay_steps < 0) throw ConfigError("adv_delay_steps must be non-negative");
  weights.validate();
}

TrainingConfig TrainingConfig::bwe_defaults() { return TrainingConfig{}; }

TrainingConfig TrainingConfig::m2s_defaults() {
  TrainingConfig cfg;
  cfg.task = Task::M2s;
  cfg.chunk_seconds = 4.0;
  cfg.weights = LossWeights::m2s_defaults();
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a real number");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t x = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, x);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as an integer");
  return x;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, x);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as an unsigned integer");
  return x;
}

// Real numbers are written with max_digits10 so that text round-trips are
// value-exact; trailing zeros are not trimmed to keep the output canonical.
std::string real_to_text(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

using Setter = std::function<void(TrainingConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"task", [](TrainingConfig& c, const std::string&, const std::string& v) { c.task = task_from_string(v); }},
      {"batch_size",
       [](TrainingConfig& c, const std::string& k, const std::string& v) {
         c.batch_size = static_cast<int>(parse_int(k, v));
       }},
      {"chunk_seconds",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.chunk_seconds = parse_real(k, v); }},
      {"total_steps",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.total_steps = parse_int(k, v); }},
      {"lr_main",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.lr_main = parse_real(k, v); }},
      {"lr_disc",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.lr_disc = parse_real(k, v); }},
      {"warmup_main",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.warmup_main = parse_int(k, v); }},
      {"warmup_disc",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.warmup_disc = parse_int(k, v); }},
      {"weight_decay",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.weight_decay = parse_real(k, v); }},
      {"beta1", [](TrainingConfig& c, const std::string& k, const std::string& v) { c.beta1 = parse_real(k, v); }},
      {"beta2", [](TrainingConfig& c, const std::string& k, const std::string& v) { c.beta2 = parse_real(k, v); }},
      {"seed", [](TrainingConfig& c, const std::string& k, const std::string& v) { c.seed = parse_uint(k, v); }},
      {"precision",
       [](TrainingConfig& c, const std::string&, const std::string& v) { c.precision = precision_from_string(v); }},
      {"weights.w_rec",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.weights.w_rec = parse_real(k, v); }},
      {"weights.w_adv",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.weights.w_adv = parse_real(k, v); }},
      {"weights.w_fm",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.weights.w_fm = parse_real(k, v); }},
      {"weights.w_kl",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.weights.w_kl = parse_real(k, v); }},
      {"adv_delay_steps",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.adv_delay_steps = parse_int(k, v); }},
      {"fm_denominator",
       [](TrainingConfig& c, const std::string&, const std::string& v) {
         c.fm_denominator = fm_denominator_from_string(v);
       }},
      {"grad_clip",
       [](TrainingConfig& c, const std::string& k, const std::string& v) { c.grad_clip = parse_real(k, v); }},
  };
  return table;
}

}  // namespace

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void apply_key_values(TrainingConfig& cfg, const KeyValues& kv) {
  const auto& table = setters();
  for (const auto& [key, value] : kv) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
}

void apply_override(TrainingConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "': expected key=value");
  KeyValues kv;
  kv[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
  apply_key_values(cfg, kv);
}

std::string config_to_text(const TrainingConfig& cfg) {
  std::ostringstream out;
  out << "task = " << to_string(cfg.task) << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "chunk_seconds = " << real_to_text(cfg.chunk_seconds) << "\n";
  out << "total_steps = " << cfg.total_steps << "\n";
  out << "lr_main = " << real_to_text(cfg.lr_main) << "\n";
  out << "lr_disc = " << real_to_text(cfg.lr_disc) << "\n";
  out << "warmup_main = " << cfg.warmup_main << "\n";
  out << "warmup_disc = " << cfg.warmup_disc << "\n";
  out << "weight_decay = " << real_to_text(cfg.weight_decay) << "\n";
  out << "beta1 = " << real_to_text(cfg.beta1) << "\n";
  out << "beta2 = " << real_to_text(cfg.beta2) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "precision = " << to_string(cfg.precision) << "\n";
  out << "weights.w_rec = " << real_to_text(cfg.weights.w_rec) << "\n";
  out << "weights.w_adv = " << real_to_text(cfg.weights.w_adv) << "\n";
  out << "weights.w_fm = " << real_to_text(cfg.weights.w_fm) << "\n";
  out << "weights.w_kl = " << real_to_text(cfg.weights.w_kl) << "\n";
  out << "adv_delay_steps = " << cfg.adv_delay_steps << "\n";
  out << "fm_denominator = " << (cfg.fm_denominator == FmDenominator::Generated ? "generated" : "real") << "\n";
  out << "grad_clip = " << real_to_text(cfg.grad_clip) << "\n";
  return out.str();
}

nlohmann::json config_to_json(const TrainingConfig& cfg) {
  nlohmann::json j;
  j["task"] = to_string(cfg.task);
  j["batch_size"] = cfg.batch_size;
  j["chunk_seconds"] = cfg.chunk_seconds;
  j["total_steps"] = cfg.total_steps;
  j["lr_main"] = cfg.lr_main;
  j["lr_disc"] = cfg.lr_disc;
  j["warmup_main"] = cfg.warmup_main;
  j["warmup_disc"] = cfg.warmup_disc;
  j["weight_decay"] = cfg.weight_decay;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["seed"] = cfg.seed;
  j["precision"] = to_string(cfg.precision);
  j["weights"]["w_rec"] = cfg.weights.w_rec;
  j["weights"]["w_adv"] = cfg.weights.w_adv;
  j["weights"]["w_fm"] = cfg.weights.w_fm;
  j["weights"]["w_kl"] = cfg.weights.w_kl;
  j["adv_delay_steps"] = cfg.adv_delay_steps;
  j["fm_denominator"] = cfg.fm_denominator == FmDenominator::Generated ? "generated" : "real";
  j["grad_clip"] = cfg.grad_clip;
  return j;
}

TrainingConfig config_from_json(const nlohmann::json& j) {
  TrainingConfig cfg;
  cfg.task = task_from_string(j.at("task").get<std::string>());
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.chunk_seconds = j.at("chunk_seconds").get<double>();
  cfg.total_steps = j.at("total_steps").get<std::int64_t>();
  cfg.lr_main = j.at("lr_main").get<double>();
  cfg.lr_disc = j.at("lr_disc").get<double>();
  cfg.warmup_main = j.at("warmup_main").get<std::int64_t>();
  cfg.warmup_disc = j.at("warmup_disc").get<std::int64_t>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.beta1 = j.at("beta1").get<double>();
  cfg.beta2 = j.at("beta2").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.precision = precision_from_string(j.at("precision").get<std::string>());
  cfg.weights.w_rec = j.at("weights").at("w_rec").get<double>();
  cfg.weights.w_adv = j.at("weights").at("w_adv").get<double>();
  cfg.weights.w_fm = j.at("weights").at("w_fm").get<double>();
  cfg.weights.w_kl = j.at("weights").at("w_kl").get<double>();
  cfg.adv_delay_steps = j.at("adv_delay_steps").get<std::int64_t>();
  cfg.fm_denominator = fm_denominator_from_string(j.at("fm_denominator").get<std::string>());
  cfg.grad_clip = j.at("grad_clip").get<double>();
  return cfg;
}

}  // namespace reenc
