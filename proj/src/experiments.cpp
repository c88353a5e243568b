// SPDX-License-Identifier: Apache-2.0
#include "reenc/experiments.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "reenc/counting.hpp"
#include "reenc/dsp.hpp"

namespace reenc {

namespace fs = std::filesystem;

namespace {

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) { return Rng(seed).fork(tag).next_u64(); }

void add_banded(BandedMetrics& acc, const BandedMetrics& x) {
  acc.stft_d.full += x.stft_d.full;
  acc.stft_d.low += x.stft_d.low;
  acc.stft_d.high += x.stft_d.high;
  acc.mel_d.full += x.mel_d.full;
  acc.mel_d.low += x.mel_d.low;
  acc.mel_d.high += x.mel_d.high;
}

void scale_banded(BandedMetrics& acc, double s) {
  acc.stft_d.full *= s;
  acc.stft_d.low *= s;
  acc.stft_d.high *= s;
  acc.mel_d.full *= s;
  acc.mel_d.low *= s;
  acc.mel_d.high *= s;
}

void add_stereo(StereoMetrics& acc, const StereoMetrics& x) {
  acc.stft_d.left += x.stft_d.left;
  acc.stft_d.right += x.stft_d.right;
  acc.stft_d.mid += x.stft_d.mid;
  acc.stft_d.side += x.stft_d.side;
  acc.mel_d.left += x.mel_d.left;
  acc.mel_d.right += x.mel_d.right;
  acc.mel_d.mid += x.mel_d.mid;
  acc.mel_d.side += x.mel_d.side;
}

void scale_stereo(StereoMetrics& acc, double s) {
  acc.stft_d.left *= s;
  acc.stft_d.right *= s;
  acc.stft_d.mid *= s;
  acc.stft_d.side *= s;
  acc.mel_d.left *= s;
  acc.mel_d.right *= s;
  acc.mel_d.mid *= s;
  acc.mel_d.side *= s;
}

AudioBuffer decode_trimmed(ToyVAE& vae, const LatentSequence& z, Eigen::Index len) {
  AudioBuffer y = vae.decode(z);
  if (y.length() < len) throw DimensionError("experiment: decode shorter than the reference");
  MatrixF m = y.samples().leftCols(len);
  return AudioBuffer(std::move(m), y.sample_rate_hz());
}

AudioBuffer sinc_upsampled_input(const AudioBuffer& x_full) {
  const int rate = x_full.sample_rate_hz();
  const AudioBuffer low = resample_sinc(x_full, rate / 2);
  AudioBuffer up = resample_sinc(low, rate);
  MatrixF m = up.samples().leftCols(x_full.length());
  return AudioBuffer(std::move(m), rate);
}

AudioBuffer fold_mono(const AudioBuffer& stereo) {
  MatrixF m = 0.5f * (stereo.samples().row(0) + stereo.samples().row(1));
  return AudioBuffer(std::move(m), stereo.sample_rate_hz());
}

AudioBuffer stack_channels(const AudioBuffer& left, const AudioBuffer& right, Eigen::Index len) {
  MatrixF m(2, len);
  m.row(0) = left.samples().row(0).leftCols(len);
  m.row(1) = right.samples().row(0).leftCols(len);
  return AudioBuffer(std::move(m), left.sample_rate_hz());
}

BandSplitConfig experiment_split(int sample_rate_hz) {
  BandSplitConfig split;
  split.cutoff_hz = sample_rate_hz / 4.0;  // the BWE transmission cutoff
  return split;
}

void log_line(std::ostream* log, const std::string& line) {
  if (log) (*log) << line << "\n" << std::flush;
}

}  // namespace

void ExperimentManifest::validate() const {
  synth.validate();
  vae_config.validate();
  training.validate();
  model_spec.validate();
  if (training.task != task)
    throw ConfigError("manifest: training.task disagrees with the experiment task");
  if (train_clips < 1 || eval_clips < 1) throw ConfigError("manifest: clip counts must be >= 1");
  if (synth.sample_rate != vae_config.sample_rate_hz)
    throw ConfigError("manifest: corpus and autoencoder sample rates differ");
  if (model_spec.latent_channels_in != vae_config.latent_channels)
    throw ConfigError("manifest: model input channels must match the autoencoder latent");
  if (vae_checkpoint.empty() && vae_steps < 1)
    throw ConfigError("manifest: vae_steps must be >= 1 when training the autoencoder");
  if (task == Task::Bwe) {
    disc_spec.validate();
  } else {
    cond_spec.validate();
    if (sweep_clips < 2) throw ConfigError("manifest: sweep needs at least two clips");
    if (sweep_lambdas.empty()) throw ConfigError("manifest: sweep needs a lambda grid");
    for (const double l : sweep_lambdas)
      if (l < 0.0 || l > 1.0) throw ConfigError("manifest: sweep lambdas must lie in [0, 1]");
  }
}

ExperimentManifest ExperimentManifest::desk_bwe() {
  ExperimentManifest m;
  m.id = "desk-bwe";
  m.task = Task::Bwe;
  m.synth = SynthSpec{};
  m.vae_config = ToyVAEConfig::tiny();
  m.vae_config.train_batch = 4;
  m.vae_config.train_chunk_seconds = 0.25;
  m.vae_steps = 2500;
  m.training = TrainingConfig::bwe_defaults();
  m.training.batch_size = 2;
  m.training.chunk_seconds = 1.0;
  m.training.total_steps = 1000;
  m.training.warmup_main = 50;
  m.training.warmup_disc = 150;
  m.training.adv_delay_steps = 150;
  m.model_spec = ModelSpec::preset_s_bwe(m.vae_config.latent_channels);
  m.disc_spec.internal_channels = 32;
  return m;
}

ExperimentManifest ExperimentManifest::desk_m2s() {
  ExperimentManifest m;
  m.id = "desk-m2s";
  m.task = Task::M2s;
  m.synth = SynthSpec{};
  m.vae_config = ToyVAEConfig::tiny();
  m.vae_config.train_batch = 4;
  m.vae_config.train_chunk_seconds = 0.25;
  m.vae_steps = 2500;
  m.training = TrainingConfig::m2s_defaults();
  m.training.batch_size = 4;
  m.training.chunk_seconds = 1.0;
  m.training.total_steps = 1000;
  m.training.warmup_main = 50;
  m.training.warmup_disc = 100;
  m.model_spec.variant = "custom";
  m.model_spec.num_blocks = 4;
  m.model_spec.hidden_dim = 256;
  m.model_spec.latent_channels_in = m.vae_config.latent_channels;
  m.model_spec.latent_channels_out = m.vae_config.latent_channels;
  m.model_spec.output_streams = 2;
  m.model_spec.conditioned = true;
  m.model_spec.condition_dim = 16;
  m.cond_spec.num_blocks = 2;
  m.cond_spec.hidden_dim = 128;
  m.cond_spec.input_channels = 2 * m.vae_config.latent_channels;
  m.cond_spec.output_dim = 16;
  m.sweep_clips = 64;
  return m;
}

ExperimentManifest ExperimentManifest::full_bwe() {
  ExperimentManifest m;
  m.id = "full-bwe";
  m.task = Task::Bwe;
  m.synth.sample_rate = 44100;
  m.synth.duration_seconds = 4.0;
  m.vae_config = ToyVAEConfig::full_scale();
  m.vae_steps = 100000;
  m.training = TrainingConfig::bwe_defaults();
  m.model_spec = ModelSpec::preset_m_bwe(64);
  m.disc_spec = DiscriminatorSpec{};
  m.train_clips = 2048;
  m.eval_clips = 128;
  return m;
}

ExperimentManifest ExperimentManifest::full_m2s() {
  ExperimentManifest m;
  m.id = "full-m2s";
  m.task = Task::M2s;
  m.synth.sample_rate = 44100;
  m.synth.duration_seconds = 8.0;
  m.vae_config = ToyVAEConfig::full_scale();
  m.vae_steps = 100000;
  m.training = TrainingConfig::m2s_defaults();
  m.model_spec = ModelSpec::preset_m2s(64, 64);
  m.cond_spec = ConditioningEncoderSpec::preset_full(64, 64);
  m.train_clips = 2048;
  m.eval_clips = 128;
  m.sweep_clips = 128;
  return m;
}

nlohmann::json manifest_to_json(const ExperimentManifest& m) {
  nlohmann::json j;
  j["id"] = m.id;
  j["task"] = to_string(m.task);
  j["seed"] = m.seed;
  j["out_dir"] = m.out_dir;
  j["synth"] = {{"sample_rate", m.synth.sample_rate},
                {"duration_seconds", m.synth.duration_seconds},
                {"f0_min", m.synth.f0_min},
                {"f0_max", m.synth.f0_max},
                {"max_partials", m.synth.max_partials},
                {"max_partial_hz_frac", m.synth.max_partial_hz_frac},
                {"rolloff_min", m.synth.rolloff_min},
                {"rolloff_max", m.synth.rolloff_max},
                {"vibrato_hz_min", m.synth.vibrato_hz_min},
                {"vibrato_hz_max", m.synth.vibrato_hz_max},
                {"vibrato_depth", m.synth.vibrato_depth},
                {"noise_level", m.synth.noise_level},
                {"noise_cutoff_min_hz", m.synth.noise_cutoff_min_hz},
                {"noise_cutoff_max_hz", m.synth.noise_cutoff_max_hz},
                {"rms_min", m.synth.rms_min},
                {"rms_max", m.synth.rms_max},
                {"pan_margin", m.synth.pan_margin}};
  j["train_clips"] = m.train_clips;
  j["eval_clips"] = m.eval_clips;
  j["sweep_clips"] = m.sweep_clips;
  j["sweep_lambdas"] = m.sweep_lambdas;
  j["vae_checkpoint"] = m.vae_checkpoint;
  j["vae_steps"] = m.vae_steps;
  j["vae_config"] = vae_config_to_json(m.vae_config);
  j["training"] = config_to_json(m.training);
  j["model_spec"] = model_spec_to_json(m.model_spec);
  j["disc_spec"] = disc_spec_to_json(m.disc_spec);
  j["cond_spec"] = cond_spec_to_json(m.cond_spec);
  return j;
}

std::string manifest_hash(const ExperimentManifest& m) {
  const std::string text = manifest_to_json(m).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

int parse_manifest_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  int parsed = 0;
  try {
    parsed = std::stoi(value, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != value.size())
    throw ConfigError("manifest key '" + key + "': cannot parse '" + value + "' as an integer");
  return parsed;
}

std::vector<double> parse_lambda_list(const std::string& value) {
  std::vector<double> lambdas;
  std::string rest = value;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string tok = rest.substr(0, comma);
    try {
      std::size_t used = 0;
      lambdas.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("manifest key 'sweep.lambdas': cannot parse '" + tok + "'");
    }
    rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
  }
  return lambdas;
}

}  // namespace

ExperimentManifest manifest_from_key_values(const KeyValues& kv) {
  ExperimentManifest m;
  const auto preset_it = kv.find("preset");
  const std::string preset = preset_it == kv.end() ? "desk-bwe" : preset_it->second;
  if (preset == "desk-bwe") m = ExperimentManifest::desk_bwe();
  else if (preset == "desk-m2s") m = ExperimentManifest::desk_m2s();
  else if (preset == "full-bwe") m = ExperimentManifest::full_bwe();
  else if (preset == "full-m2s") m = ExperimentManifest::full_m2s();
  else throw ConfigError("manifest: unknown preset '" + preset + "'");

  for (const auto& [key, value] : kv) {
    if (key == "preset") continue;
    if (key == "id") m.id = value;
    else if (key == "out_dir") m.out_dir = value;
    else if (key == "seed") {
      KeyValues one{{"seed", value}};
      apply_key_values(m.training, one);  // reuse the unsigned parser
      m.seed = m.training.seed;
    } else if (key == "train_clips") m.train_clips = parse_manifest_int(key, value);
    else if (key == "eval_clips") m.eval_clips = parse_manifest_int(key, value);
    else if (key == "sweep_clips") m.sweep_clips = parse_manifest_int(key, value);
    else if (key == "sweep.lambdas") m.sweep_lambdas = parse_lambda_list(value);
    else if (key == "vae.steps") m.vae_steps = parse_manifest_int(key, value);
    else if (key == "vae.checkpoint") m.vae_checkpoint = value;
    else if (key == "model.num_blocks") {
      m.model_spec.num_blocks = parse_manifest_int(key, value);
      m.model_spec.variant = "custom";
    } else if (key == "model.hidden_dim") {
      m.model_spec.hidden_dim = parse_manifest_int(key, value);
      m.model_spec.variant = "custom";
    } else if (key == "disc.internal_channels") m.disc_spec.internal_channels = parse_manifest_int(key, value);
    else if (key == "cond.num_blocks") m.cond_spec.num_blocks = parse_manifest_int(key, value);
    else if (key == "cond.hidden_dim") m.cond_spec.hidden_dim = parse_manifest_int(key, value);
    else if (key.rfind("training.", 0) == 0) {
      KeyValues one{{key.substr(9), value}};
      apply_key_values(m.training, one);
    } else {
      throw ConfigError("manifest: unknown key '" + key + "'");
    }
  }
  m.training.seed = m.seed;
  m.validate();
  return m;
}

ExperimentManifest load_manifest(const std::string& path) {
  return manifest_from_key_values(parse_config_file(path));
}

EvalRow bwe_vae_bound_row(ToyVAE& vae, const std::vector<AudioBuffer>& eval_corpus,
                          const BandSplitConfig& split) {
  if (eval_corpus.empty()) throw DataError("bwe rows: empty eval corpus");
  BandedMetrics acc{};
  for (const auto& x : eval_corpus) {
    const AudioBuffer y = decode_trimmed(vae, vae.encode(x), x.length());
    add_banded(acc, banded_metrics(x, y, split));
  }
  scale_banded(acc, 1.0 / static_cast<double>(eval_corpus.size()));
  return EvalRow{"autoencoder reconstruction", acc, std::nullopt, std::nullopt};
}

EvalRow bwe_unprocessed_row(ToyVAE& vae, const std::vector<AudioBuffer>& eval_corpus,
                            const BandSplitConfig& split) {
  if (eval_corpus.empty()) throw DataError("bwe rows: empty eval corpus");
  BandedMetrics acc{};
  for (const auto& x : eval_corpus) {
    const AudioBuffer x_in = sinc_upsampled_input(x);
    const AudioBuffer y = decode_trimmed(vae, vae.encode(x_in), x.length());
    add_banded(acc, banded_metrics(x, y, split));
  }
  scale_banded(acc, 1.0 / static_cast<double>(eval_corpus.size()));
  return EvalRow{"unprocessed low-band input", acc, std::nullopt, std::nullopt};
}

EvalRow bwe_model_row(const std::string& label, FTheta<float>& f, ToyVAE& vae,
                      const std::vector<AudioBuffer>& eval_corpus, const BandSplitConfig& split) {
  if (eval_corpus.empty()) throw DataError("bwe rows: empty eval corpus");
  BandedMetrics acc{};
  for (const auto& x : eval_corpus) {
    const AudioBuffer x_in = sinc_upsampled_input(x);
    const AudioBuffer y = [&] {
      AudioBuffer full = bwe_infer_waveform(f, vae, x_in);
      MatrixF m = full.samples().leftCols(x.length());
      return AudioBuffer(std::move(m), full.sample_rate_hz());
    }();
    add_banded(acc, banded_metrics(x, y, split));
  }
  scale_banded(acc, 1.0 / static_cast<double>(eval_corpus.size()));
  const double gflops =
      count_flops(f.spec(), 1.0, vae.spec().frame_rate_hz()) / 1e9;
  return EvalRow{label, acc, std::nullopt, gflops};
}

EvalRow m2s_vae_bound_row(ToyVAE& vae, const std::vector<AudioBuffer>& eval_corpus) {
  if (eval_corpus.empty()) throw DataError("m2s rows: empty eval corpus");
  StereoMetrics acc{};
  for (const auto& x : eval_corpus) {
    const AudioBuffer left = decode_trimmed(vae, vae.encode(x.channel(0)), x.length());
    const AudioBuffer right = decode_trimmed(vae, vae.encode(x.channel(1)), x.length());
    add_stereo(acc, stereo_metrics(x, stack_channels(left, right, x.length())));
  }
  scale_stereo(acc, 1.0 / static_cast<double>(eval_corpus.size()));
  return EvalRow{"autoencoder stereo reconstruction", std::nullopt, acc, std::nullopt};
}

EvalRow m2s_prior_row(FTheta<float>& f, ToyVAE& vae, const std::vector<AudioBuffer>& eval_corpus,
                      std::uint64_t seed) {
  if (eval_corpus.empty()) throw DataError("m2s rows: empty eval corpus");
  StereoMetrics acc{};
  Rng root(seed);
  for (std::size_t i = 0; i < eval_corpus.size(); ++i) {
    const AudioBuffer& x = eval_corpus[i];
    Rng clip_rng = root.fork(9000 + i);
    const Eigen::VectorXf c = sample_prior(f.spec().condition_dim, clip_rng).c;
    const AudioBuffer y = m2s_infer_waveform(f, vae, fold_mono(x), c);
    add_stereo(acc, stereo_metrics(x, y));
  }
  scale_stereo(acc, 1.0 / static_cast<double>(eval_corpus.size()));
  const double gflops = count_flops(f.spec(), 1.0, vae.spec().frame_rate_hz()) / 1e9;
  return EvalRow{"prior condition (blind upmix)", std::nullopt, acc, gflops};
}

EvalRow m2s_oracle_row(FTheta<float>& f, GPhi<float>& g, ToyVAE& vae,
                       const std::vector<AudioBuffer>& eval_corpus) {
  if (eval_corpus.empty()) throw DataError("m2s rows: empty eval corpus");
  StereoMetrics acc{};
  for (const auto& x : eval_corpus) {
    const LatentSequence z_l = vae.encode(x.channel(0));
    const LatentSequence z_r = vae.encode(x.channel(1));
    const auto post = g.forward(stack_streams(z_l, z_r).as_stacked_matrix());
    const Eigen::VectorXf c = post.mu.col(0);
    const AudioBuffer y = m2s_infer_waveform(f, vae, fold_mono(x), c);
    add_stereo(acc, stereo_metrics(x, y));
  }
  scale_stereo(acc, 1.0 / static_cast<double>(eval_corpus.size()));
  const double gflops = count_flops(f.spec(), 1.0, vae.spec().frame_rate_hz()) / 1e9;
  return EvalRow{"oracle condition", std::nullopt, acc, gflops};
}

namespace {

struct ExperimentDirs {
  fs::path reports, checkpoints, sweeps;
};

ExperimentDirs prepare_dirs(const ExperimentManifest& m) {
  ExperimentDirs d{fs::path(m.out_dir) / "reports", fs::path(m.out_dir) / "checkpoints",
                   fs::path(m.out_dir) / "sweeps"};
  fs::create_directories(d.reports);
  fs::create_directories(d.checkpoints);
  fs::create_directories(d.sweeps);
  std::ofstream mf(fs::path(m.out_dir) / "manifest.json");
  mf << manifest_to_json(m).dump(2) << "\n";
  return d;
}

ToyVAE obtain_vae(const ExperimentManifest& m, const std::vector<AudioBuffer>& mono_corpus,
                  const fs::path& checkpoints, std::ostream* log, std::string& saved_path) {
  if (!m.vae_checkpoint.empty()) {
    try {
      ToyVAE vae = load_vae(m.vae_checkpoint);
      saved_path = m.vae_checkpoint;
      return vae;
    } catch (const Error& e) {
      throw ArtifactError("experiment: autoencoder checkpoint unavailable (every row needs it): " +
                          std::string(e.what()));
    }
  }
  log_line(log, "[experiment] training toy autoencoder (" + std::to_string(m.vae_steps) + " steps)");
  auto trained = train_toy_vae(m.vae_config, mono_corpus, m.vae_steps, sub_seed(m.seed, 3));
  saved_path = (checkpoints / "vae.reck").string();
  save_vae(trained.model, saved_path);
  return std::move(trained.model);
}

nlohmann::json base_provenance(const ExperimentManifest& m) {
  nlohmann::json p;
  p["manifest"] = manifest_to_json(m);
  p["manifest_hash"] = manifest_hash(m);
  return p;
}

std::string ckpt_file_hash(const std::string& path) { return checkpoint_hash(load_checkpoint(path)); }

}  // namespace

BweExperimentResult run_bwe_experiment(const ExperimentManifest& m, std::ostream* log) {
  m.validate();
  if (m.task != Task::Bwe) throw ConfigError("bwe experiment: manifest task is not bwe");
  const ExperimentDirs dirs = prepare_dirs(m);

  const auto train_corpus = synth_corpus(m.synth, m.train_clips, sub_seed(m.seed, 1), 1);
  const auto eval_corpus = synth_corpus(m.synth, m.eval_clips, sub_seed(m.seed, 2), 1);
  BweExperimentResult result;
  ToyVAE vae = obtain_vae(m, train_corpus, dirs.checkpoints, log, result.vae_checkpoint_path);

  log_line(log, "[experiment] building training pairs");
  PairPool pool(build_bwe_pairs(vae, train_corpus, m.training.chunk_seconds), m.seed);

  const BandSplitConfig split = experiment_split(m.synth.sample_rate);
  EvalReport report;
  report.title = "bandwidth extension, simulated transmission (" + m.id + ")";
  report.provenance = base_provenance(m);
  report.provenance["vae_checkpoint"] = result.vae_checkpoint_path;
  report.provenance["vae_hash"] = ckpt_file_hash(result.vae_checkpoint_path);

  log_line(log, "[experiment] evaluating autoencoder bound and degradation floor");
  report.rows.push_back(bwe_vae_bound_row(vae, eval_corpus, split));
  report.rows.push_back(bwe_unprocessed_row(vae, eval_corpus, split));

  TrainLoopOptions loop;
  loop.log = log;
  loop.log_every = 100;

  {
    TrainingConfig cfg = m.training;
    cfg.weights.w_adv = 0.0;
    cfg.weights.w_fm = 0.0;
    log_line(log, "[experiment] training latent module, reconstruction only");
    BweTrainerState st = make_bwe_trainer(cfg, m.model_spec, m.disc_spec);
    run_bwe_training(st, pool, loop);
    result.l1_checkpoint_path = (dirs.checkpoints / "bwe_l1.reck").string();
    save_bwe_state(st, result.l1_checkpoint_path);
    report.rows.push_back(bwe_model_row("latent module (L1)", st.f, vae, eval_corpus, split));
    report.provenance["l1_hash"] = ckpt_file_hash(result.l1_checkpoint_path);
  }
  {
    log_line(log, "[experiment] training latent module, full objective");
    BweTrainerState st = make_bwe_trainer(m.training, m.model_spec, m.disc_spec);
    run_bwe_training(st, pool, loop);
    result.full_checkpoint_path = (dirs.checkpoints / "bwe_full.reck").string();
    save_bwe_state(st, result.full_checkpoint_path);
    report.rows.push_back(
        bwe_model_row("latent module (L1 + discriminator)", st.f, vae, eval_corpus, split));
    report.provenance["full_hash"] = ckpt_file_hash(result.full_checkpoint_path);
  }

  save_report(report, (dirs.reports / "bwe.json").string());
  std::ofstream table(dirs.reports / "bwe.txt");
  table << render_report_table(report);
  result.report = std::move(report);
  return result;
}

M2sExperimentResult run_m2s_experiment(const ExperimentManifest& m, std::ostream* log) {
  m.validate();
  if (m.task != Task::M2s) throw ConfigError("m2s experiment: manifest task is not m2s");
  const ExperimentDirs dirs = prepare_dirs(m);

  const auto train_corpus = synth_corpus(m.synth, m.train_clips, sub_seed(m.seed, 1), 2);
  const auto eval_corpus = synth_corpus(m.synth, m.eval_clips, sub_seed(m.seed, 2), 2);
  const auto sweep_corpus = synth_corpus(m.synth, m.sweep_clips, sub_seed(m.seed, 4), 2);

  // The autoencoder is mono; feed it every channel view of the stereo corpus.
  std::vector<AudioBuffer> vae_corpus;
  vae_corpus.reserve(train_corpus.size() * 3);
  for (const auto& x : train_corpus) {
    vae_corpus.push_back(fold_mono(x));
    vae_corpus.push_back(x.channel(0));
    vae_corpus.push_back(x.channel(1));
  }

  M2sExperimentResult result;
  ToyVAE vae = obtain_vae(m, vae_corpus, dirs.checkpoints, log, result.vae_checkpoint_path);

  log_line(log, "[experiment] building training pairs");
  PairPool pool(build_m2s_pairs(vae, train_corpus, m.training.chunk_seconds), m.seed);

  EvalReport report;
  report.title = "mono-to-stereo upmix (" + m.id + ")";
  report.provenance = base_provenance(m);
  report.provenance["vae_checkpoint"] = result.vae_checkpoint_path;
  report.provenance["vae_hash"] = ckpt_file_hash(result.vae_checkpoint_path);

  log_line(log, "[experiment] training upmix module");
  M2sTrainerState st = make_m2s_trainer(m.training, m.model_spec, m.cond_spec);
  TrainLoopOptions loop;
  loop.log = log;
  loop.log_every = 100;
  run_m2s_training(st, pool, loop);
  result.checkpoint_path = (dirs.checkpoints / "m2s.reck").string();
  save_m2s_state(st, result.checkpoint_path);
  report.provenance["m2s_hash"] = ckpt_file_hash(result.checkpoint_path);

  log_line(log, "[experiment] evaluating rows");
  report.rows.push_back(m2s_vae_bound_row(vae, eval_corpus));
  report.rows.push_back(m2s_prior_row(st.f, vae, eval_corpus, sub_seed(m.seed, 6)));
  report.rows.push_back(m2s_oracle_row(st.f, st.g, vae, eval_corpus));

  log_line(log, "[experiment] interpolation sweep");
  result.sweep = interpolation_sweep(st.f, st.g, vae, sweep_corpus, m.sweep_lambdas, sub_seed(m.seed, 5));
  result.scatter_csv_path = (dirs.sweeps / "scatter.csv").string();
  {
    std::ofstream f(result.scatter_csv_path);
    f << sweep_scatter_csv(result.sweep);
    std::ofstream s(dirs.sweeps / "summary.csv");
    s << sweep_summary_csv(result.sweep);
  }
  report.provenance["sweep"] = {{"lambdas", result.sweep.lambdas},
                                {"pearson", result.sweep.correlations},
                                {"trend_spearman", result.sweep.trend_spearman},
                                {"trend_p", result.sweep.trend_p}};

  save_report(report, (dirs.reports / "m2s.json").string());
  std::ofstream table(dirs.reports / "m2s.txt");
  table << render_report_table(report);
  result.report = std::move(report);
  return result;
}

}  // namespace reenc
