// SPDX-License-Identifier: Apache-2.0
//
// Operator surface. One process per invocation; every run logs its fully
// resolved configuration, errors are single-line and machine parsable.
// Exit codes: 0 success, 2 config error, 3 artifact mismatch, 4 data error,
// 1 internal.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "reenc/checkpoint.hpp"
#include "reenc/counting.hpp"
#include "reenc/experiments.hpp"
#include "reenc/latent_io.hpp"
#include "reenc/metrics.hpp"
#include "reenc/report.hpp"
#include "reenc/sweep.hpp"
#include "reenc/synth.hpp"
#include "reenc/train.hpp"
#include "reenc/wav.hpp"

namespace fs = std::filesystem;
using namespace reenc;
using nlohmann::json;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("REENC_OUT_DIR");
  return env && *env ? std::string(env) : std::string("out");
}

void log_resolved(const json& cfg) { std::cerr << "resolved-config: " << cfg.dump() << "\n"; }

// Checkpoint problems (missing file, wrong container, wrong kind) are all
// artifact mismatches to the operator, whatever layer noticed first.
template <class F>
auto as_artifact(const std::string& what, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const ArtifactError&) {
    throw;
  } catch (const Error& e) {
    throw ArtifactError(what + ": " + e.what());
  }
}

std::vector<std::string> list_wavs(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("corpus: '" + dir + "' is not a directory");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") names.push_back(e.path().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw DataError("corpus: no .wav files in '" + dir + "'");
  return names;
}

std::vector<AudioBuffer> load_wav_dir(const std::string& dir, int want_channels) {
  std::vector<AudioBuffer> out;
  for (const auto& name : list_wavs(dir)) {
    AudioBuffer b = read_wav(name);
    if (want_channels != 0 && b.channels() != want_channels)
      throw DataError("corpus: '" + name + "' has " + std::to_string(b.channels()) +
                      " channel(s), expected " + std::to_string(want_channels));
    if (!out.empty() && b.sample_rate_hz() != out.front().sample_rate_hz())
      throw DataError("corpus: mixed sample rates in '" + dir + "'");
    out.push_back(std::move(b));
  }
  return out;
}

KeyValues parse_set_args(const std::vector<std::string>& sets) {
  KeyValues kv;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + s + "' is not key=value");
    const std::string key = s.substr(0, eq);
    if (kv.count(key)) throw ConfigError("duplicate override key '" + key + "'");
    kv[key] = s.substr(eq + 1);
  }
  return kv;
}

AudioBuffer decode_stereo(ToyVAE& vae, const StackedLatent& z) {
  const auto [zl, zr] = split_streams(z);
  AudioBuffer left = vae.decode(zl);
  AudioBuffer right = vae.decode(zr);
  const Eigen::Index n = std::min(left.length(), right.length());
  MatrixF m(2, n);
  m.row(0) = left.samples().row(0).leftCols(n);
  m.row(1) = right.samples().row(0).leftCols(n);
  return AudioBuffer(std::move(m), left.sample_rate_hz());
}

// ---- subcommand state ----

struct CorpusArgs {
  std::string out;
  int count = 16;
  bool stereo = false;
  std::uint64_t seed = 0;
  int sample_rate = 8000;
  double duration = 2.0;
};

struct TrainVaeArgs {
  std::string corpus, out, preset = "tiny";
  int steps = 2500;
  std::uint64_t seed = 0;
  int latent_channels = 0;  // 0 keeps the preset value
  int batch = 0;
  double lr = 0.0;
  double chunk = 0.0;
};

struct CodecArgs {
  std::string vae, in, out;
};

struct TrainArgs {
  std::string vae, corpus, out, preset, resume, trace;
  std::vector<std::string> sets;
  std::uint64_t checkpoint_every = 0;
  std::int64_t run_steps = -1;
};

struct InferArgs {
  std::string task, ckpt, vae, in, out, save_latent;
  std::string condition = "prior", cond_file;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string ref, cand, out, label = "candidate vs reference";
  double cutoff = 0.0;  // 0 uses sample_rate / 4
};

struct FlopsArgs {
  std::string variant = "M";
  int blocks = 0, hidden = 0, latent = 64, streams = 1, cond_dim = 0;
  double frame_rate = 44100.0 / 1024.0;
  double seconds = 1.0;
};

struct SweepArgs {
  std::string ckpt, vae, corpus, out;
  std::string lambdas = "0,0.25,0.5,0.75,1";
  std::uint64_t seed = 0;
};

struct ExperimentArgs {
  std::string preset, manifest, out;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

// ---- subcommand bodies ----

int cmd_corpus(const CorpusArgs& a) {
  SynthSpec spec;
  spec.sample_rate = a.sample_rate;
  spec.duration_seconds = a.duration;
  spec.validate();
  if (a.count < 1) throw ConfigError("corpus: count must be >= 1");
  log_resolved({{"cmd", "corpus"},
                {"out", a.out},
                {"count", a.count},
                {"channels", a.stereo ? 2 : 1},
                {"seed", a.seed},
                {"sample_rate", a.sample_rate},
                {"duration_seconds", a.duration}});
  fs::create_directories(a.out);
  const auto paths = write_corpus(spec, a.count, a.seed, a.stereo ? 2 : 1, a.out);
  std::cout << "wrote " << paths.size() << " clips to " << a.out << "\n";
  return 0;
}

int cmd_train_vae(const TrainVaeArgs& a) {
  ToyVAEConfig cfg;
  if (a.preset == "tiny") cfg = ToyVAEConfig::tiny();
  else if (a.preset == "full-scale") cfg = ToyVAEConfig::full_scale();
  else throw ConfigError("train-vae: unknown preset '" + a.preset + "'");
  if (a.latent_channels > 0) cfg.latent_channels = a.latent_channels;
  if (a.batch > 0) cfg.train_batch = a.batch;
  if (a.lr > 0.0) cfg.train_lr = a.lr;
  if (a.chunk > 0.0) cfg.train_chunk_seconds = a.chunk;
  cfg.validate();
  if (a.steps < 1) throw ConfigError("train-vae: steps must be >= 1");

  const auto corpus = load_wav_dir(a.corpus, 1);
  if (corpus.front().sample_rate_hz() != cfg.sample_rate_hz)
    throw DataError("train-vae: corpus rate " + std::to_string(corpus.front().sample_rate_hz()) +
                    " != autoencoder rate " + std::to_string(cfg.sample_rate_hz));
  log_resolved({{"cmd", "train-vae"},
                {"corpus", a.corpus},
                {"out", a.out},
                {"steps", a.steps},
                {"seed", a.seed},
                {"vae_config", vae_config_to_json(cfg)}});

  auto r = train_toy_vae(cfg, corpus, a.steps, a.seed);
  save_vae(r.model, a.out);
  std::cout << "saved " << a.out << " rec-loss " << r.rec_trace.front() << " -> " << r.rec_trace.back()
            << "\n";
  return 0;
}

int cmd_encode(const CodecArgs& a) {
  ToyVAE vae = as_artifact("autoencoder '" + a.vae + "'", [&] { return load_vae(a.vae); });
  const AudioBuffer x = read_wav(a.in);
  if (x.channels() != 1) throw DataError("encode: input must be mono; encode channels separately");
  if (x.sample_rate_hz() != vae.config().sample_rate_hz)
    throw DataError("encode: input is " + std::to_string(x.sample_rate_hz()) +
                    " Hz, autoencoder expects " + std::to_string(vae.config().sample_rate_hz));
  log_resolved({{"cmd", "encode"}, {"vae", a.vae}, {"in", a.in}, {"out", a.out}});
  const LatentSequence z = vae.encode(x);
  write_latent_file(a.out, z);
  std::cout << "wrote " << a.out << " (" << z.channels() << "x" << z.frames() << ")\n";
  return 0;
}

int cmd_decode(const CodecArgs& a) {
  ToyVAE vae = as_artifact("autoencoder '" + a.vae + "'", [&] { return load_vae(a.vae); });
  const AnyLatent any = read_latent_file(a.in);
  log_resolved({{"cmd", "decode"}, {"vae", a.vae}, {"in", a.in}, {"out", a.out}});
  AudioBuffer y = std::holds_alternative<LatentSequence>(any)
                      ? vae.decode(std::get<LatentSequence>(any))
                      : decode_stereo(vae, std::get<StackedLatent>(any));
  write_wav(a.out, y);
  std::cout << "wrote " << a.out << " (" << y.channels() << "ch, " << y.length() << " samples)\n";
  return 0;
}

ExperimentManifest preset_manifest(const std::string& name) {
  KeyValues kv{{"preset", name}};
  return manifest_from_key_values(kv);
}

int cmd_train_bwe(const TrainArgs& a) {
  ToyVAE vae = as_artifact("autoencoder '" + a.vae + "'", [&] { return load_vae(a.vae); });
  const auto corpus = load_wav_dir(a.corpus, 1);

  TrainLoopOptions loop;
  loop.log = &std::cerr;
  loop.checkpoint_path = a.out;
  loop.checkpoint_every = static_cast<std::int64_t>(a.checkpoint_every);
  loop.run_steps = a.run_steps;

  if (!a.resume.empty()) {
    if (!a.sets.empty()) throw ConfigError("train-bwe: --set conflicts with --resume (recipe comes from the checkpoint)");
    BweTrainerState st =
        as_artifact("checkpoint '" + a.resume + "'", [&] { return load_bwe_state(a.resume); });
    log_resolved({{"cmd", "train-bwe"}, {"resume", a.resume}, {"out", a.out},
                  {"config", config_to_json(st.cfg)}});
    PairPool pool(build_bwe_pairs(vae, corpus, st.cfg.chunk_seconds), st.cfg.seed);
    const auto records = run_bwe_training(st, pool, loop);
    save_bwe_state(st, a.out);
    if (!a.trace.empty()) {
      std::ofstream t(a.trace);
      for (const auto& r : records) t << format_step_record(r) << "\n";
    }
    std::cout << "saved " << a.out << " at step " << st.step << "\n";
    return 0;
  }

  ExperimentManifest base = preset_manifest(a.preset.empty() ? "desk-bwe" : a.preset);
  if (base.task != Task::Bwe) throw ConfigError("train-bwe: preset '" + a.preset + "' is not a bwe recipe");
  TrainingConfig cfg = base.training;
  apply_key_values(cfg, parse_set_args(a.sets));
  ModelSpec spec = base.model_spec;
  spec.latent_channels_in = spec.latent_channels_out = vae.spec().latent_channels;
  log_resolved({{"cmd", "train-bwe"}, {"vae", a.vae}, {"corpus", a.corpus}, {"out", a.out},
                {"config", config_to_json(cfg)}, {"model_spec", model_spec_to_json(spec)},
                {"disc_spec", disc_spec_to_json(base.disc_spec)}});

  BweTrainerState st = make_bwe_trainer(cfg, spec, base.disc_spec);
  PairPool pool(build_bwe_pairs(vae, corpus, cfg.chunk_seconds), cfg.seed);
  const auto records = run_bwe_training(st, pool, loop);
  save_bwe_state(st, a.out);
  if (!a.trace.empty()) {
    std::ofstream t(a.trace);
    for (const auto& r : records) t << format_step_record(r) << "\n";
  }
  std::cout << "saved " << a.out << " at step " << st.step << "\n";
  return 0;
}

int cmd_train_m2s(const TrainArgs& a) {
  ToyVAE vae = as_artifact("autoencoder '" + a.vae + "'", [&] { return load_vae(a.vae); });
  const auto corpus = load_wav_dir(a.corpus, 2);

  TrainLoopOptions loop;
  loop.log = &std::cerr;
  loop.checkpoint_path = a.out;
  loop.checkpoint_every = static_cast<std::int64_t>(a.checkpoint_every);
  loop.run_steps = a.run_steps;

  if (!a.resume.empty()) {
    if (!a.sets.empty()) throw ConfigError("train-m2s: --set conflicts with --resume (recipe comes from the checkpoint)");
    M2sTrainerState st =
        as_artifact("checkpoint '" + a.resume + "'", [&] { return load_m2s_state(a.resume); });
    log_resolved({{"cmd", "train-m2s"}, {"resume", a.resume}, {"out", a.out},
                  {"config", config_to_json(st.cfg)}});
    PairPool pool(build_m2s_pairs(vae, corpus, st.cfg.chunk_seconds), st.cfg.seed);
    const auto records = run_m2s_training(st, pool, loop);
    save_m2s_state(st, a.out);
    if (!a.trace.empty()) {
      std::ofstream t(a.trace);
      for (const auto& r : records) t << format_step_record(r) << "\n";
    }
    std::cout << "saved " << a.out << " at step " << st.step << "\n";
    return 0;
  }

  ExperimentManifest base = preset_manifest(a.preset.empty() ? "desk-m2s" : a.preset);
  if (base.task != Task::M2s) throw ConfigError("train-m2s: preset '" + a.preset + "' is not an m2s recipe");
  TrainingConfig cfg = base.training;
  apply_key_values(cfg, parse_set_args(a.sets));
  ModelSpec spec = base.model_spec;
  spec.latent_channels_in = spec.latent_channels_out = vae.spec().latent_channels;
  ConditioningEncoderSpec cond = base.cond_spec;
  cond.input_channels = 2 * vae.spec().latent_channels;
  log_resolved({{"cmd", "train-m2s"}, {"vae", a.vae}, {"corpus", a.corpus}, {"out", a.out},
                {"config", config_to_json(cfg)}, {"model_spec", model_spec_to_json(spec)},
                {"cond_spec", cond_spec_to_json(cond)}});

  M2sTrainerState st = make_m2s_trainer(cfg, spec, cond);
  PairPool pool(build_m2s_pairs(vae, corpus, cfg.chunk_seconds), cfg.seed);
  const auto records = run_m2s_training(st, pool, loop);
  save_m2s_state(st, a.out);
  if (!a.trace.empty()) {
    std::ofstream t(a.trace);
    for (const auto& r : records) t << format_step_record(r) << "\n";
  }
  std::cout << "saved " << a.out << " at step " << st.step << "\n";
  return 0;
}

bool is_latent_path(const std::string& path) { return fs::path(path).extension() == ".relt"; }

Eigen::VectorXf condition_from_args(const InferArgs& a, int dim) {
  if (a.condition == "prior" || a.condition == "seed") {
    Rng rng(a.seed);
    return sample_prior(dim, rng).c;
  }
  if (a.condition == "file") {
    if (a.cond_file.empty()) throw ConfigError("infer: --condition file needs --cond-file");
    std::ifstream f(a.cond_file);
    if (!f) throw DataError("infer: cannot open condition file '" + a.cond_file + "'");
    json j;
    try {
      f >> j;
    } catch (const json::exception& e) {
      throw DataError("infer: condition file '" + a.cond_file + "': " + e.what());
    }
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
      throw DataError("infer: condition file must be a JSON array of " + std::to_string(dim) + " numbers");
    Eigen::VectorXf c(dim);
    for (int i = 0; i < dim; ++i) c[i] = j[i].get<float>();
    if (!c.allFinite()) throw DataError("infer: condition file contains non-finite values");
    return c;
  }
  throw ConfigError("infer: --condition must be prior, seed, or file");
}

int cmd_infer(const InferArgs& a) {
  ToyVAE vae = as_artifact("autoencoder '" + a.vae + "'", [&] { return load_vae(a.vae); });
  const Checkpoint ck = as_artifact("checkpoint '" + a.ckpt + "'", [&] { return load_checkpoint(a.ckpt); });
  if (!ck.meta.contains("task")) throw ArtifactError("infer: checkpoint '" + a.ckpt + "' has no task tag");
  const std::string ck_task = ck.meta["task"].get<std::string>();
  if (!a.task.empty() && a.task != ck_task)
    throw ArtifactError("infer: checkpoint task is '" + ck_task + "', requested '" + a.task + "'");
  const bool latent_in = is_latent_path(a.in);

  log_resolved({{"cmd", "infer"}, {"task", ck_task}, {"ckpt", a.ckpt}, {"vae", a.vae},
                {"in", a.in}, {"out", a.out}, {"condition", a.condition}, {"seed", a.seed},
                {"pipeline", latent_in ? "predict -> decode" : "encode -> predict -> decode"}});
  std::cerr << "pipeline: " << (latent_in ? "predict -> decode" : "encode -> predict -> decode") << "\n";

  if (ck_task == "bwe") {
    BweTrainerState st =
        as_artifact("checkpoint '" + a.ckpt + "'", [&] { return bwe_state_from_checkpoint(ck); });
    AudioBuffer y = [&] {
      if (latent_in) {
        const LatentSequence z = read_latent_file_mono(a.in);
        if (z.channels() != st.model_spec.latent_channels_in)
          throw ArtifactError("infer: latent has " + std::to_string(z.channels()) +
                              " channels, model expects " + std::to_string(st.model_spec.latent_channels_in));
        const LatentSequence z_hat = f_theta_predict_mono(st.f, z, nullptr);
        if (!a.save_latent.empty()) write_latent_file(a.save_latent, z_hat);
        return vae.decode(z_hat);
      }
      AudioBuffer x = read_wav(a.in);
      if (x.channels() != 1) throw DataError("infer: bwe input must be mono");
      AudioBuffer out = bwe_infer_waveform(st.f, vae, x);
      if (!a.save_latent.empty()) write_latent_file(a.save_latent, vae.encode(out));
      return out;
    }();
    write_wav(a.out, y);
    std::cout << "wrote " << a.out << " (" << y.length() << " samples)\n";
    return 0;
  }
  if (ck_task == "m2s") {
    M2sTrainerState st =
        as_artifact("checkpoint '" + a.ckpt + "'", [&] { return m2s_state_from_checkpoint(ck); });
    const Eigen::VectorXf c = condition_from_args(a, st.model_spec.condition_dim);
    AudioBuffer y = [&] {
      if (latent_in) {
        const LatentSequence z = read_latent_file_mono(a.in);
        if (z.channels() != st.model_spec.latent_channels_in)
          throw ArtifactError("infer: latent has " + std::to_string(z.channels()) +
                              " channels, model expects " + std::to_string(st.model_spec.latent_channels_in));
        const ConditionVector cv(Eigen::VectorXf::Zero(c.size()), Eigen::VectorXf::Ones(c.size()), c);
        const StackedLatent z_hat = f_theta_predict_stereo(st.f, z, cv);
        if (!a.save_latent.empty()) write_latent_file(a.save_latent, z_hat);
        return decode_stereo(vae, z_hat);
      }
      AudioBuffer x = read_wav(a.in);
      if (x.channels() != 1) throw DataError("infer: m2s input must be mono");
      AudioBuffer out = m2s_infer_waveform(st.f, vae, x, c);
      if (!a.save_latent.empty()) {
        const LatentSequence zl = vae.encode(out.channel(0));
        const LatentSequence zr = vae.encode(out.channel(1));
        write_latent_file(a.save_latent, stack_streams(zl, zr));
      }
      return out;
    }();
    write_wav(a.out, y);
    std::cout << "wrote " << a.out << " (stereo, " << y.length() << " samples)\n";
    return 0;
  }
  throw ArtifactError("infer: checkpoint task '" + ck_task + "' is not a latent module");
}

int cmd_eval(const EvalArgs& a) {
  const auto ref_names = list_wavs(a.ref);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& r : ref_names) {
    const fs::path c = fs::path(a.cand) / fs::path(r).filename();
    if (fs::exists(c)) pairs.emplace_back(r, c.string());
  }
  if (!fs::is_directory(a.cand)) throw DataError("eval: '" + a.cand + "' is not a directory");
  if (pairs.empty()) throw DataError("eval: no filenames shared between '" + a.ref + "' and '" + a.cand + "'");

  const AudioBuffer probe = read_wav(pairs.front().first);
  const bool stereo = probe.channels() == 2;
  BandSplitConfig split;
  split.cutoff_hz = a.cutoff > 0.0 ? a.cutoff : probe.sample_rate_hz() / 4.0;
  log_resolved({{"cmd", "eval"}, {"ref", a.ref}, {"cand", a.cand}, {"out", a.out},
                {"pairs", pairs.size()}, {"stereo", stereo}, {"cutoff_hz", split.cutoff_hz}});

  EvalRow row;
  row.label = a.label;
  if (stereo) {
    StereoMetrics acc{};
    for (const auto& [rp, cp] : pairs) {
      const AudioBuffer ref = read_wav(rp);
      const AudioBuffer cand = read_wav(cp);
      const StereoMetrics m = stereo_metrics(ref, cand);
      acc.stft_d.left += m.stft_d.left; acc.stft_d.right += m.stft_d.right;
      acc.stft_d.mid += m.stft_d.mid; acc.stft_d.side += m.stft_d.side;
      acc.mel_d.left += m.mel_d.left; acc.mel_d.right += m.mel_d.right;
      acc.mel_d.mid += m.mel_d.mid; acc.mel_d.side += m.mel_d.side;
    }
    const double inv = 1.0 / static_cast<double>(pairs.size());
    acc.stft_d.left *= inv; acc.stft_d.right *= inv; acc.stft_d.mid *= inv; acc.stft_d.side *= inv;
    acc.mel_d.left *= inv; acc.mel_d.right *= inv; acc.mel_d.mid *= inv; acc.mel_d.side *= inv;
    row.stereo = acc;
  } else {
    BandedMetrics acc{};
    for (const auto& [rp, cp] : pairs) {
      const AudioBuffer ref = read_wav(rp);
      const AudioBuffer cand = read_wav(cp);
      const BandedMetrics m = banded_metrics(ref, cand, split);
      acc.stft_d.full += m.stft_d.full; acc.stft_d.low += m.stft_d.low; acc.stft_d.high += m.stft_d.high;
      acc.mel_d.full += m.mel_d.full; acc.mel_d.low += m.mel_d.low; acc.mel_d.high += m.mel_d.high;
    }
    const double inv = 1.0 / static_cast<double>(pairs.size());
    acc.stft_d.full *= inv; acc.stft_d.low *= inv; acc.stft_d.high *= inv;
    acc.mel_d.full *= inv; acc.mel_d.low *= inv; acc.mel_d.high *= inv;
    row.banded = acc;
  }

  EvalReport report;
  report.title = "evaluation";
  report.provenance = {{"ref", a.ref}, {"cand", a.cand}, {"pairs", pairs.size()},
                       {"cutoff_hz", split.cutoff_hz}};
  report.rows.push_back(row);
  if (!a.out.empty()) save_report(report, a.out);
  std::cout << render_report_table(report);
  return 0;
}

int cmd_flops(const FlopsArgs& a) {
  ModelSpec spec;
  if (a.variant == "S") spec = ModelSpec::preset_s_bwe(a.latent);
  else if (a.variant == "M") spec = ModelSpec::preset_m_bwe(a.latent);
  else if (a.variant == "custom") {
    spec.variant = "custom";
    spec.num_blocks = a.blocks > 0 ? a.blocks : spec.num_blocks;
    spec.hidden_dim = a.hidden > 0 ? a.hidden : spec.hidden_dim;
    spec.latent_channels_in = spec.latent_channels_out = a.latent;
  } else {
    throw ConfigError("flops: variant must be S, M, or custom");
  }
  spec.output_streams = a.streams;
  if (a.cond_dim > 0) {
    spec.conditioned = true;
    spec.condition_dim = a.cond_dim;
  }
  spec.validate();
  if (!(a.frame_rate > 0.0) || !(a.seconds > 0.0))
    throw ConfigError("flops: frame rate and seconds must be positive");
  log_resolved({{"cmd", "flops"}, {"model_spec", model_spec_to_json(spec)},
                {"frame_rate_hz", a.frame_rate}, {"seconds", a.seconds}});

  Rng rng(0);
  FTheta<float> f(spec);
  f.init(rng);
  std::cout << "params: " << count_params(f) << "\n";
  std::cout << "flops-per-frame: " << count_flops_per_frame(spec) << "\n";
  std::cout << "gflops-per-audio-second: " << count_flops(spec, 1.0, a.frame_rate) / 1e9 << "\n";
  if (a.seconds != 1.0)
    std::cout << "gflops-total: " << count_flops(spec, a.seconds, a.frame_rate) / 1e9 << "\n";
  return 0;
}

int cmd_sweep(const SweepArgs& a) {
  ToyVAE vae = as_artifact("autoencoder '" + a.vae + "'", [&] { return load_vae(a.vae); });
  M2sTrainerState st = as_artifact("checkpoint '" + a.ckpt + "'", [&] { return load_m2s_state(a.ckpt); });
  const auto corpus = load_wav_dir(a.corpus, 2);

  std::vector<double> lambdas;
  {
    KeyValues kv{{"preset", "desk-m2s"}, {"sweep.lambdas", a.lambdas}};
    lambdas = manifest_from_key_values(kv).sweep_lambdas;
  }
  log_resolved({{"cmd", "sweep"}, {"ckpt", a.ckpt}, {"vae", a.vae}, {"corpus", a.corpus},
                {"out", a.out}, {"lambdas", lambdas}, {"seed", a.seed}});

  const SweepResult r = interpolation_sweep(st.f, st.g, vae, corpus, lambdas, a.seed);
  fs::create_directories(a.out);
  {
    std::ofstream sc(fs::path(a.out) / "scatter.csv");
    sc << sweep_scatter_csv(r);
    std::ofstream su(fs::path(a.out) / "summary.csv");
    su << sweep_summary_csv(r);
  }
  for (std::size_t i = 0; i < r.lambdas.size(); ++i)
    std::cout << "lambda=" << r.lambdas[i] << " pearson=" << r.correlations[i] << "\n";
  std::cout << "trend-spearman: " << r.trend_spearman << "\n";
  std::cout << "trend-p: " << r.trend_p << "\n";
  return 0;
}

int cmd_ckpt_dump(const std::string& path) {
  const Checkpoint ck = as_artifact("checkpoint '" + path + "'", [&] { return load_checkpoint(path); });
  log_resolved({{"cmd", "ckpt-dump"}, {"in", path}});
  std::cout << checkpoint_manifest(ck);
  std::cout << "content-hash: " << checkpoint_hash(ck) << "\n";
  return 0;
}

int cmd_experiment(const ExperimentArgs& a) {
  KeyValues kv;
  if (!a.manifest.empty()) kv = parse_config_file(a.manifest);
  for (const auto& [k, v] : parse_set_args(a.sets)) {
    if (kv.count(k)) throw ConfigError("experiment: key '" + k + "' set twice");
    kv[k] = v;
  }
  if (!a.preset.empty()) kv["preset"] = a.preset;
  if (!a.out.empty()) kv["out_dir"] = a.out;
  else if (!kv.count("out_dir")) kv["out_dir"] = default_out_dir();
  if (a.seed) kv["seed"] = std::to_string(*a.seed);

  const ExperimentManifest m = manifest_from_key_values(kv);
  log_resolved({{"cmd", "experiment"}, {"manifest", manifest_to_json(m)},
                {"manifest_hash", manifest_hash(m)}});

  if (m.task == Task::Bwe) {
    const auto r = run_bwe_experiment(m, &std::cerr);
    std::cout << render_report_table(r.report);
  } else {
    const auto r = run_m2s_experiment(m, &std::cerr);
    std::cout << render_report_table(r.report);
    for (std::size_t i = 0; i < r.sweep.lambdas.size(); ++i)
      std::cout << "lambda=" << r.sweep.lambdas[i] << " pearson=" << r.sweep.correlations[i] << "\n";
    std::cout << "trend-p: " << r.sweep.trend_p << "\n";
  }
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ';');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-space audio processing toolkit"};
  app.require_subcommand(1);

  CorpusArgs corpus_args;
  auto* c_corpus = app.add_subcommand("corpus", "generate a synthetic clip directory");
  c_corpus->add_option("--out", corpus_args.out, "output directory")->required();
  c_corpus->add_option("--count", corpus_args.count, "number of clips");
  c_corpus->add_flag("--stereo", corpus_args.stereo, "two-channel clips");
  c_corpus->add_option("--seed", corpus_args.seed, "corpus seed");
  c_corpus->add_option("--sample-rate", corpus_args.sample_rate, "sample rate in Hz");
  c_corpus->add_option("--duration", corpus_args.duration, "clip length in seconds");

  TrainVaeArgs vae_args;
  auto* c_vae = app.add_subcommand("train-vae", "train the toy autoencoder");
  c_vae->add_option("--corpus", vae_args.corpus, "mono wav directory")->required();
  c_vae->add_option("--out", vae_args.out, "checkpoint path")->required();
  c_vae->add_option("--preset", vae_args.preset, "tiny or full-scale");
  c_vae->add_option("--steps", vae_args.steps, "optimizer steps");
  c_vae->add_option("--seed", vae_args.seed, "training seed");
  c_vae->add_option("--latent-channels", vae_args.latent_channels, "override latent channels");
  c_vae->add_option("--batch", vae_args.batch, "override batch size");
  c_vae->add_option("--lr", vae_args.lr, "override learning rate");
  c_vae->add_option("--chunk", vae_args.chunk, "override chunk seconds");

  CodecArgs enc_args;
  auto* c_enc = app.add_subcommand("encode", "wav to latent file");
  c_enc->add_option("--vae", enc_args.vae, "autoencoder checkpoint")->required();
  c_enc->add_option("--in", enc_args.in, "input wav")->required();
  c_enc->add_option("--out", enc_args.out, "output .relt")->required();

  CodecArgs dec_args;
  auto* c_dec = app.add_subcommand("decode", "latent file to wav");
  c_dec->add_option("--vae", dec_args.vae, "autoencoder checkpoint")->required();
  c_dec->add_option("--in", dec_args.in, "input .relt")->required();
  c_dec->add_option("--out", dec_args.out, "output wav")->required();

  auto add_train_opts = [](CLI::App* cmd, TrainArgs& args) {
    cmd->add_option("--vae", args.vae, "frozen autoencoder checkpoint")->required();
    cmd->add_option("--corpus", args.corpus, "wav directory")->required();
    cmd->add_option("--out", args.out, "checkpoint path")->required();
    cmd->add_option("--preset", args.preset, "training recipe preset");
    cmd->add_option("--set", args.sets, "config override key=value")->take_all();
    cmd->add_option("--resume", args.resume, "resume from checkpoint");
    cmd->add_option("--checkpoint-every", args.checkpoint_every, "periodic save interval");
    cmd->add_option("--run-steps", args.run_steps, "stop after this many steps");
    cmd->add_option("--trace", args.trace, "write per-step loss trace here");
  };
  TrainArgs bwe_args, m2s_args;
  auto* c_bwe = app.add_subcommand("train-bwe", "train the bandwidth-extension module");
  add_train_opts(c_bwe, bwe_args);
  auto* c_m2s = app.add_subcommand("train-m2s", "train the stereo upmix module");
  add_train_opts(c_m2s, m2s_args);

  InferArgs infer_args;
  auto* c_infer = app.add_subcommand("infer", "run a trained module on wav or latent input");
  c_infer->add_option("--task", infer_args.task, "bwe or m2s (checked against the checkpoint)");
  c_infer->add_option("--ckpt", infer_args.ckpt, "module checkpoint")->required();
  c_infer->add_option("--vae", infer_args.vae, "autoencoder checkpoint")->required();
  c_infer->add_option("--in", infer_args.in, "input .wav or .relt")->required();
  c_infer->add_option("--out", infer_args.out, "output wav")->required();
  c_infer->add_option("--save-latent", infer_args.save_latent, "also write the predicted latent");
  c_infer->add_option("--condition", infer_args.condition, "prior, seed, or file (m2s)");
  c_infer->add_option("--cond-file", infer_args.cond_file, "JSON array for --condition file");
  c_infer->add_option("--seed", infer_args.seed, "condition sampling seed");

  EvalArgs eval_args;
  auto* c_eval = app.add_subcommand("eval", "compare candidate wavs against references");
  c_eval->add_option("--ref", eval_args.ref, "reference wav directory")->required();
  c_eval->add_option("--cand", eval_args.cand, "candidate wav directory")->required();
  c_eval->add_option("--out", eval_args.out, "report json path");
  c_eval->add_option("--label", eval_args.label, "row label");
  c_eval->add_option("--cutoff", eval_args.cutoff, "band split cutoff in Hz");

  FlopsArgs flops_args;
  auto* c_flops = app.add_subcommand("flops", "parameter and FLOP counts for a model spec");
  c_flops->add_option("--variant", flops_args.variant, "S, M, or custom");
  c_flops->add_option("--blocks", flops_args.blocks, "custom block count");
  c_flops->add_option("--hidden", flops_args.hidden, "custom hidden width");
  c_flops->add_option("--latent", flops_args.latent, "latent channels");
  c_flops->add_option("--streams", flops_args.streams, "output streams (1 or 2)");
  c_flops->add_option("--cond-dim", flops_args.cond_dim, "condition dimension (0 = unconditioned)");
  c_flops->add_option("--frame-rate", flops_args.frame_rate, "latent frames per second");
  c_flops->add_option("--seconds", flops_args.seconds, "audio seconds for the total");

  SweepArgs sweep_args;
  auto* c_sweep = app.add_subcommand("sweep", "condition interpolation sweep over a stereo corpus");
  c_sweep->add_option("--ckpt", sweep_args.ckpt, "m2s checkpoint")->required();
  c_sweep->add_option("--vae", sweep_args.vae, "autoencoder checkpoint")->required();
  c_sweep->add_option("--corpus", sweep_args.corpus, "stereo wav directory")->required();
  c_sweep->add_option("--out", sweep_args.out, "output directory")->default_val(default_out_dir());
  c_sweep->add_option("--lambdas", sweep_args.lambdas, "comma-separated grid");
  c_sweep->add_option("--seed", sweep_args.seed, "prior sampling seed");

  std::string dump_path;
  auto* c_dump = app.add_subcommand("ckpt-dump", "print a checkpoint manifest");
  c_dump->add_option("--in", dump_path, "checkpoint path")->required();

  ExperimentArgs exp_args;
  std::uint64_t exp_seed = 0;
  auto* c_exp = app.add_subcommand("experiment", "run a scripted end-to-end experiment");
  c_exp->add_option("--preset", exp_args.preset, "desk-bwe, desk-m2s, full-bwe, full-m2s");
  c_exp->add_option("--manifest", exp_args.manifest, "manifest file (key=value)");
  c_exp->add_option("--set", exp_args.sets, "manifest override key=value")->take_all();
  c_exp->add_option("--out", exp_args.out, "output directory");
  auto* seed_opt = c_exp->add_option("--seed", exp_seed, "experiment seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: config: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*c_corpus) return cmd_corpus(corpus_args);
    if (*c_vae) return cmd_train_vae(vae_args);
    if (*c_enc) return cmd_encode(enc_args);
    if (*c_dec) return cmd_decode(dec_args);
    if (*c_bwe) return cmd_train_bwe(bwe_args);
    if (*c_m2s) return cmd_train_m2s(m2s_args);
    if (*c_infer) return cmd_infer(infer_args);
    if (*c_eval) return cmd_eval(eval_args);
    if (*c_flops) return cmd_flops(flops_args);
    if (*c_sweep) return cmd_sweep(sweep_args);
    if (*c_dump) return cmd_ckpt_dump(dump_path);
    if (*c_exp) {
      if (seed_opt->count()) exp_args.seed = exp_seed;
      return cmd_experiment(exp_args);
    }
    std::cerr << "error: config: no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const ArtifactError& e) {
    std::cerr << "error: artifact: " << one_line(e.what()) << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: data: " << one_line(e.what()) << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "error: data: " << one_line(e.what()) << "\n";
    return 4;
  } catch (const FormatError& e) {
    std::cerr << "error: data: " << one_line(e.what()) << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
}
