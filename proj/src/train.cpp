// SPDX-License-Identifier: Apache-2.0
#include "reenc/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reenc/dsp.hpp"

namespace reenc {

namespace {

LatentSequence encode_mono(ToyVAE& ae, const AudioBuffer& x) { return ae.encode(x); }

void require_task(const TrainingConfig& cfg, Task expected, const char* who) {
  if (cfg.task != expected)
    throw ConfigError(std::string(who) + ": config task is " + to_string(cfg.task) + ", expected " +
                      to_string(expected));
}

const LatentSequence& mono_target(const TrainingPair& p, const char* who) {
  if (!std::holds_alternative<LatentSequence>(p.z_tgt))
    throw DimensionError(std::string(who) + ": pair carries a stereo target; this trainer is mono");
  return std::get<LatentSequence>(p.z_tgt);
}

const StackedLatent& stereo_target(const TrainingPair& p, const char* who) {
  if (!std::holds_alternative<StackedLatent>(p.z_tgt))
    throw DimensionError(std::string(who) + ": pair carries a mono target; this trainer is stereo");
  return std::get<StackedLatent>(p.z_tgt);
}

void require_batch(const std::vector<TrainingPair>& batch, const char* who) {
  if (batch.empty()) throw DataError(std::string(who) + ": empty batch");
}

void clip_gradients(std::vector<nn::ParamRef<float>>& params, double max_norm) {
  if (max_norm <= 0) return;
  double sq = 0.0;
  for (const auto& p : params) sq += static_cast<double>(p.g->squaredNorm());
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const float scale = static_cast<float>(max_norm / norm);
  for (auto& p : params) *p.g *= scale;
}

nn::AdamWConfig optimizer_config(const TrainingConfig& cfg) {
  nn::AdamWConfig oc;
  oc.beta1 = cfg.beta1;
  oc.beta2 = cfg.beta2;
  oc.weight_decay = cfg.weight_decay;
  return oc;
}

bool adv_active(const TrainingConfig& cfg, std::int64_t step) {
  return (cfg.weights.w_adv > 0.0 || cfg.weights.w_fm > 0.0) && step >= cfg.adv_delay_steps;
}

// Score gradient folds into the final feature tap, which aliases the raw
// score map flattened row-major by rows.
void fold_score_grad(std::vector<nn::Mat<float>>& dfeat, const nn::Mat<float>& dscore, float scale) {
  const auto w = dscore.cols();
  for (Eigen::Index r = 0; r < dscore.rows(); ++r)
    for (Eigen::Index c = 0; c < w; ++c) dfeat.back()(0, r * w + c) += scale * dscore(r, c);
}

std::vector<nn::Mat<float>> zero_like_features(const std::vector<nn::Mat<float>>& feats) {
  std::vector<nn::Mat<float>> out;
  out.reserve(feats.size());
  for (const auto& f : feats) out.push_back(nn::Mat<float>::Zero(f.rows(), f.cols()));
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

TrainingPair make_bwe_pair(ToyVAE& frozen_ae, const AudioBuffer& x_fullband) {
  if (x_fullband.channels() != 1)
    throw DimensionError("bwe pair: input must be mono, got " + std::to_string(x_fullband.channels()) +
                         " channels");
  const int rate = x_fullband.sample_rate_hz();
  if (rate != frozen_ae.spec().sample_rate_hz)
    throw DimensionError("bwe pair: audio rate " + std::to_string(rate) +
                         " does not match the autoencoder rate " +
                         std::to_string(frozen_ae.spec().sample_rate_hz));
  const AudioBuffer x_low = resample_sinc(x_fullband, rate / 2);
  AudioBuffer x_up = resample_sinc(x_low, rate);
  if (x_up.length() < x_fullband.length())
    throw DimensionError("bwe pair: upsampled signal shorter than the source");
  MatrixF trimmed = x_up.samples().leftCols(x_fullband.length());
  const AudioBuffer x_in(std::move(trimmed), rate);
  TrainingPair pair{encode_mono(frozen_ae, x_in), encode_mono(frozen_ae, x_fullband)};
  return pair;
}

TrainingPair make_m2s_pair(ToyVAE& frozen_ae, const AudioBuffer& x_stereo) {
  if (x_stereo.channels() != 2) throw DimensionError("m2s pair: input must be stereo");
  if (x_stereo.sample_rate_hz() != frozen_ae.spec().sample_rate_hz)
    throw DimensionError("m2s pair: audio rate does not match the autoencoder rate");
  MatrixF mono = 0.5f * (x_stereo.samples().row(0) + x_stereo.samples().row(1));
  const AudioBuffer x_mono(std::move(mono), x_stereo.sample_rate_hz());
  LatentSequence z_in = encode_mono(frozen_ae, x_mono);
  LatentSequence z_l = encode_mono(frozen_ae, x_stereo.channel(0));
  LatentSequence z_r = encode_mono(frozen_ae, x_stereo.channel(1));
  return TrainingPair{std::move(z_in), stack_streams(z_l, z_r)};
}

double lr_at(std::int64_t step, double base_lr, std::int64_t warmup_steps) {
  if (step < 0) throw ValueError("lr_at: step must be >= 0");
  if (warmup_steps < 1) throw ValueError("lr_at: warmup must be >= 1 step");
  const double ramp = static_cast<double>(step) / static_cast<double>(warmup_steps);
  return base_lr * std::min(1.0, ramp);
}

nlohmann::json model_spec_to_json(const ModelSpec& s) {
  return nlohmann::json{{"variant", s.variant},
                        {"num_blocks", s.num_blocks},
                        {"hidden_dim", s.hidden_dim},
                        {"expansion", s.expansion},
                        {"latent_channels_in", s.latent_channels_in},
                        {"latent_channels_out", s.latent_channels_out},
                        {"output_streams", s.output_streams},
                        {"conditioned", s.conditioned},
                        {"condition_dim", s.condition_dim},
                        {"dw_kernel", s.dw_kernel}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.variant = j.at("variant").get<std::string>();
  s.num_blocks = j.at("num_blocks").get<int>();
  s.hidden_dim = j.at("hidden_dim").get<int>();
  s.expansion = j.at("expansion").get<int>();
  s.latent_channels_in = j.at("latent_channels_in").get<int>();
  s.latent_channels_out = j.at("latent_channels_out").get<int>();
  s.output_streams = j.at("output_streams").get<int>();
  s.conditioned = j.at("conditioned").get<bool>();
  s.condition_dim = j.at("condition_dim").get<int>();
  s.dw_kernel = j.at("dw_kernel").get<int>();
  s.validate();
  return s;
}

nlohmann::json cond_spec_to_json(const ConditioningEncoderSpec& s) {
  return nlohmann::json{{"num_blocks", s.num_blocks},   {"hidden_dim", s.hidden_dim},
                        {"expansion", s.expansion},     {"input_channels", s.input_channels},
                        {"output_dim", s.output_dim},   {"dw_kernel", s.dw_kernel},
                        {"log_sigma_clamp", s.log_sigma_clamp}};
}

ConditioningEncoderSpec cond_spec_from_json(const nlohmann::json& j) {
  ConditioningEncoderSpec s;
  s.num_blocks = j.at("num_blocks").get<int>();
  s.hidden_dim = j.at("hidden_dim").get<int>();
  s.expansion = j.at("expansion").get<int>();
  s.input_channels = j.at("input_channels").get<int>();
  s.output_dim = j.at("output_dim").get<int>();
  s.dw_kernel = j.at("dw_kernel").get<int>();
  s.log_sigma_clamp = j.at("log_sigma_clamp").get<double>();
  s.validate();
  return s;
}

nlohmann::json disc_spec_to_json(const DiscriminatorSpec& s) {
  return nlohmann::json{{"num_layers", s.num_layers},
                        {"internal_channels", s.internal_channels},
                        {"input_channels", s.input_channels},
                        {"output_channels", s.output_channels},
                        {"leaky_slope", s.leaky_slope}};
}

DiscriminatorSpec disc_spec_from_json(const nlohmann::json& j) {
  DiscriminatorSpec s;
  s.num_layers = j.at("num_layers").get<int>();
  s.internal_channels = j.at("internal_channels").get<int>();
  s.input_channels = j.at("input_channels").get<int>();
  s.output_channels = j.at("output_channels").get<int>();
  s.leaky_slope = j.at("leaky_slope").get<double>();
  s.validate();
  return s;
}

std::string format_step_record(const StepRecord& r) {
  std::ostringstream out;
  out.precision(10);
  out << "step=" << r.step << " total=" << r.gen.total;
  for (const auto& [name, value] : r.gen.terms) out << " " << name << "=" << value;
  if (r.disc_loss) out << " disc=" << *r.disc_loss;
  out << " lr_main=" << r.lr_main << " lr_disc=" << r.lr_disc;
  return out.str();
}

BweTrainerState::BweTrainerState(const TrainingConfig& c, const ModelSpec& ms, const DiscriminatorSpec& ds)
    : cfg(c), model_spec(ms), disc_spec(ds), f(ms), d(ds), opt_f(optimizer_config(c)), opt_d(optimizer_config(c)) {}

BweTrainerState make_bwe_trainer(const TrainingConfig& cfg, const ModelSpec& model_spec,
                                 const DiscriminatorSpec& disc_spec) {
  cfg.validate();
  require_task(cfg, Task::Bwe, "bwe trainer");
  model_spec.validate();
  if (model_spec.conditioned || model_spec.output_streams != 1)
    throw ConfigError("bwe trainer: model must be unconditioned with one output stream");
  disc_spec.validate();
  BweTrainerState st(cfg, model_spec, disc_spec);
  Rng root(cfg.seed);
  Rng f_rng = root.fork(10);
  Rng d_rng = root.fork(11);
  st.f.init(f_rng);
  st.d.init(d_rng);
  return st;
}

double bwe_disc_update(BweTrainerState& st, const std::vector<TrainingPair>& batch) {
  require_batch(batch, "bwe disc update");
  auto d_params = st.d.params();
  nn::zero_grads(d_params);
  const float inv_b = 1.0f / static_cast<float>(batch.size());
  double loss = 0.0;
  for (const auto& pair : batch) {
    const LatentSequence& tgt = mono_target(pair, "bwe disc update");
    const nn::Mat<float> z_hat = st.f.forward(pair.z_in.data(), nullptr);  // constants for D

    auto real_out = st.d.forward(tgt.data());
    const nn::Mat<float> score_real = real_out.score;
    {
      const auto g =
          disc_loss_grad<float>(score_real, nn::Mat<float>::Zero(score_real.rows(), score_real.cols()));
      auto dfeat = zero_like_features(real_out.features);
      fold_score_grad(dfeat, g.d_real, inv_b);
      st.d.backward(dfeat);
    }

    auto fake_out = st.d.forward(z_hat);
    const auto g = disc_loss_grad<float>(score_real, fake_out.score);
    auto dfeat = zero_like_features(fake_out.features);
    fold_score_grad(dfeat, g.d_fake, inv_b);
    st.d.backward(dfeat);
    loss += static_cast<double>(g.value) / batch.size();
  }
  if (!std::isfinite(loss)) throw ValueError("bwe disc update: non-finite term 'disc'");
  clip_gradients(d_params, st.cfg.grad_clip);
  st.opt_d.step(d_params, lr_at(st.step + 1, st.cfg.lr_disc, st.cfg.warmup_disc));
  return loss;
}

LossReport bwe_gen_update(BweTrainerState& st, const std::vector<TrainingPair>& batch) {
  require_batch(batch, "bwe gen update");
  const bool use_adv = adv_active(st.cfg, st.step);
  LossWeights effective = st.cfg.weights;
  if (!use_adv) effective.w_adv = effective.w_fm = 0.0;

  auto f_params = st.f.params();
  nn::zero_grads(f_params);
  const float inv_b = 1.0f / static_cast<float>(batch.size());
  double rec_total = 0.0, adv_total = 0.0, fm_total = 0.0;
  for (const auto& pair : batch) {
    const LatentSequence& tgt = mono_target(pair, "bwe gen update");
    const nn::Mat<float> z_hat = st.f.forward(pair.z_in.data(), nullptr);
    auto [rec, drec] = rec_loss_grad<float>(z_hat, tgt.data());
    rec_total += static_cast<double>(rec) / batch.size();
    nn::Mat<float> dz = static_cast<float>(effective.w_rec) * inv_b * drec;

    if (use_adv) {
      auto real_out = st.d.forward(tgt.data());
      const std::vector<nn::Mat<float>> real_feats = real_out.features;
      auto fake_out = st.d.forward(z_hat);
      auto [adv, dscore] = gen_adv_loss_grad<float>(fake_out.score);
      auto [fm, dfm] = feature_match_loss_grad<float>(real_feats, fake_out.features, st.cfg.fm_denominator);
      adv_total += static_cast<double>(adv) / batch.size();
      fm_total += static_cast<double>(fm) / batch.size();
      auto dfeat = zero_like_features(fake_out.features);
      for (std::size_t l = 0; l < dfeat.size(); ++l)
        dfeat[l] = static_cast<float>(effective.w_fm) * inv_b * dfm[l];
      fold_score_grad(dfeat, dscore, static_cast<float>(effective.w_adv) * inv_b);
      dz += st.d.backward(dfeat);  // input gradient only; D is stepped elsewhere
    }
    st.f.backward(dz, nullptr);
  }

  std::map<std::string, double> terms{{"rec", rec_total}};
  if (use_adv) {
    terms["adv"] = adv_total;
    terms["fm"] = fm_total;
  }
  LossReport report = compose(terms, effective);
  clip_gradients(f_params, st.cfg.grad_clip);
  st.opt_f.step(f_params, lr_at(st.step + 1, st.cfg.lr_main, st.cfg.warmup_main));
  return report;
}

StepRecord train_step_bwe(BweTrainerState& st, const std::vector<TrainingPair>& batch) {
  StepRecord rec;
  if (adv_active(st.cfg, st.step)) rec.disc_loss = bwe_disc_update(st, batch);
  rec.gen = bwe_gen_update(st, batch);
  st.step += 1;
  rec.step = st.step;
  rec.lr_main = lr_at(rec.step, st.cfg.lr_main, st.cfg.warmup_main);
  rec.lr_disc = lr_at(rec.step, st.cfg.lr_disc, st.cfg.warmup_disc);
  return rec;
}

M2sTrainerState::M2sTrainerState(const TrainingConfig& c, const ModelSpec& ms,
                                 const ConditioningEncoderSpec& cs)
    : cfg(c), model_spec(ms), cond_spec(cs), f(ms), g(cs), opt(optimizer_config(c)) {}

M2sTrainerState make_m2s_trainer(const TrainingConfig& cfg, const ModelSpec& model_spec,
                                 const ConditioningEncoderSpec& cond_spec) {
  cfg.validate();
  require_task(cfg, Task::M2s, "m2s trainer");
  model_spec.validate();
  cond_spec.validate();
  if (!model_spec.conditioned || model_spec.output_streams != 2)
    throw ConfigError("m2s trainer: model must be conditioned with two output streams");
  if (cond_spec.output_dim != model_spec.condition_dim)
    throw ConfigError("m2s trainer: conditioning output dim must equal the model's condition dim");
  if (cond_spec.input_channels != 2 * model_spec.latent_channels_out)
    throw ConfigError("m2s trainer: conditioning encoder must read the stacked stereo latent");
  M2sTrainerState st(cfg, model_spec, cond_spec);
  Rng root(cfg.seed);
  Rng f_rng = root.fork(10);
  Rng g_rng = root.fork(12);
  st.f.init(f_rng);
  st.g.init(g_rng);
  st.eps_rng = root.fork(13);
  return st;
}

StepRecord train_step_m2s(M2sTrainerState& st, const std::vector<TrainingPair>& batch) {
  require_batch(batch, "m2s step");
  auto f_params = st.f.params();
  auto g_params = st.g.params();
  std::vector<nn::ParamRef<float>> joint = f_params;
  joint.insert(joint.end(), g_params.begin(), g_params.end());
  nn::zero_grads(joint);

  const float inv_b = 1.0f / static_cast<float>(batch.size());
  const auto w_rec = static_cast<float>(st.cfg.weights.w_rec);
  const auto w_kl = static_cast<float>(st.cfg.weights.w_kl);
  double rec_total = 0.0, kl_total = 0.0;
  for (const auto& pair : batch) {
    const StackedLatent& tgt = stereo_target(pair, "m2s step");
    const nn::Mat<float> target = tgt.as_stacked_matrix();

    auto post = st.g.forward(target);
    nn::Mat<float> eps(post.mu.rows(), 1);
    for (Eigen::Index i = 0; i < eps.rows(); ++i) eps(i, 0) = static_cast<float>(st.eps_rng.gauss());
    const nn::Mat<float> sigma = post.log_sigma.array().exp();
    const nn::Mat<float> c = post.mu + sigma.cwiseProduct(eps);

    const nn::Mat<float> z_hat = st.f.forward(pair.z_in.data(), &c);
    auto [rec, drec] = rec_loss_grad<float>(z_hat, target);
    rec_total += static_cast<double>(rec) / batch.size();
    const double kl = kl_loss<float>(post.mu, post.log_sigma);
    kl_total += kl / batch.size();

    nn::Mat<float> dz = w_rec * inv_b * drec;
    nn::Mat<float> dc = nn::Mat<float>::Zero(c.rows(), 1);
    st.f.backward(dz, &dc);
    const auto klg = kl_loss_grad<float>(post.mu, post.log_sigma);
    const nn::Mat<float> dmu = dc + (w_kl * inv_b) * klg.d_mu;
    const nn::Mat<float> dls =
        dc.cwiseProduct(eps).cwiseProduct(sigma) + (w_kl * inv_b) * klg.d_log_sigma;
    st.g.backward(dmu, dls);
  }

  LossReport report = compose({{"rec", rec_total}, {"kl", kl_total}}, st.cfg.weights);
  clip_gradients(joint, st.cfg.grad_clip);
  st.opt.step(joint, lr_at(st.step + 1, st.cfg.lr_main, st.cfg.warmup_main));

  st.step += 1;
  StepRecord out;
  out.step = st.step;
  out.gen = report;
  out.lr_main = lr_at(out.step, st.cfg.lr_main, st.cfg.warmup_main);
  out.lr_disc = 0.0;
  return out;
}

// ---- checkpointing ----

namespace {

void fill_common_meta(Checkpoint& ck, const TrainingConfig& cfg, std::int64_t step) {
  ck.meta["kind"] = "reenc_trainer";
  ck.meta["task"] = to_string(cfg.task);
  ck.meta["config"] = config_to_json(cfg);
  ck.meta["config_hash"] = [&] {
    std::uint64_t h = fnv1a(config_to_text(cfg));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  }();
  ck.meta["step"] = step;
}

void check_kind_task(const Checkpoint& ck, Task expected, const char* who) {
  if (!ck.meta.contains("kind") || ck.meta.at("kind") != "reenc_trainer")
    throw ArtifactError(std::string(who) + ": not a trainer checkpoint");
  const auto task = ck.meta.at("task").get<std::string>();
  if (task != to_string(expected))
    throw ArtifactError(std::string(who) + ": checkpoint task is '" + task + "', expected '" +
                        to_string(expected) + "'");
}

}  // namespace

Checkpoint bwe_state_to_checkpoint(BweTrainerState& st) {
  Checkpoint ck;
  fill_common_meta(ck, st.cfg, st.step);
  ck.meta["model_spec"] = model_spec_to_json(st.model_spec);
  ck.meta["disc_spec"] = disc_spec_to_json(st.disc_spec);
  auto f_params = st.f.params();
  auto d_params = st.d.params();
  pack_params(ck, f_params);
  pack_params(ck, d_params);
  pack_adamw(ck, "opt_f", st.opt_f, f_params);
  pack_adamw(ck, "opt_d", st.opt_d, d_params);
  return ck;
}

BweTrainerState bwe_state_from_checkpoint(const Checkpoint& ck) {
  check_kind_task(ck, Task::Bwe, "bwe checkpoint");
  const TrainingConfig cfg = config_from_json(ck.meta.at("config"));
  const ModelSpec ms = model_spec_from_json(ck.meta.at("model_spec"));
  const DiscriminatorSpec ds = disc_spec_from_json(ck.meta.at("disc_spec"));
  BweTrainerState st(cfg, ms, ds);
  auto f_params = st.f.params();
  auto d_params = st.d.params();
  unpack_params(ck, f_params);
  unpack_params(ck, d_params);
  unpack_adamw(ck, "opt_f", st.opt_f, f_params);
  unpack_adamw(ck, "opt_d", st.opt_d, d_params);
  st.step = ck.meta.at("step").get<std::int64_t>();
  return st;
}

void save_bwe_state(BweTrainerState& st, const std::string& path) {
  const Checkpoint ck = bwe_state_to_checkpoint(st);
  save_checkpoint(ck, path);
}

BweTrainerState load_bwe_state(const std::string& path) {
  return bwe_state_from_checkpoint(load_checkpoint(path));
}

Checkpoint m2s_state_to_checkpoint(M2sTrainerState& st) {
  Checkpoint ck;
  fill_common_meta(ck, st.cfg, st.step);
  ck.meta["model_spec"] = model_spec_to_json(st.model_spec);
  ck.meta["cond_spec"] = cond_spec_to_json(st.cond_spec);
  ck.meta["rng"]["eps"] = rng_state_json(st.eps_rng);
  auto f_params = st.f.params();
  auto g_params = st.g.params();
  pack_params(ck, f_params);
  pack_params(ck, g_params);
  std::vector<nn::ParamRef<float>> joint = f_params;
  joint.insert(joint.end(), g_params.begin(), g_params.end());
  pack_adamw(ck, "opt_main", st.opt, joint);
  return ck;
}

M2sTrainerState m2s_state_from_checkpoint(const Checkpoint& ck) {
  check_kind_task(ck, Task::M2s, "m2s checkpoint");
  const TrainingConfig cfg = config_from_json(ck.meta.at("config"));
  const ModelSpec ms = model_spec_from_json(ck.meta.at("model_spec"));
  const ConditioningEncoderSpec cs = cond_spec_from_json(ck.meta.at("cond_spec"));
  M2sTrainerState st(cfg, ms, cs);
  auto f_params = st.f.params();
  auto g_params = st.g.params();
  unpack_params(ck, f_params);
  unpack_params(ck, g_params);
  std::vector<nn::ParamRef<float>> joint = f_params;
  joint.insert(joint.end(), g_params.begin(), g_params.end());
  unpack_adamw(ck, "opt_main", st.opt, joint);
  st.eps_rng = rng_from_json(ck.meta.at("rng").at("eps"));
  st.step = ck.meta.at("step").get<std::int64_t>();
  return st;
}

void save_m2s_state(M2sTrainerState& st, const std::string& path) {
  const Checkpoint ck = m2s_state_to_checkpoint(st);
  save_checkpoint(ck, path);
}

M2sTrainerState load_m2s_state(const std::string& path) {
  return m2s_state_from_checkpoint(load_checkpoint(path));
}

// ---- data order ----

PairPool::PairPool(std::vector<TrainingPair> pairs, std::uint64_t seed)
    : pairs_(std::move(pairs)), seed_(seed) {
  if (pairs_.empty()) throw DataError("pair pool: no training pairs (corpus shorter than one chunk?)");
}

const TrainingPair& PairPool::at_position(std::int64_t position) const {
  if (position < 0) throw ValueError("pair pool: negative position");
  const auto n = static_cast<std::int64_t>(pairs_.size());
  const std::int64_t epoch = position / n;
  const std::int64_t within = position % n;
  if (epoch != cached_epoch_) {
    order_.resize(pairs_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    Rng rng = Rng(seed_).fork(1000 + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order_.size(); i > 1; --i)
      std::swap(order_[i - 1], order_[static_cast<std::size_t>(rng.below(i))]);
    cached_epoch_ = epoch;
  }
  return pairs_[order_[static_cast<std::size_t>(within)]];
}

std::vector<TrainingPair> build_bwe_pairs(ToyVAE& frozen_ae, const std::vector<AudioBuffer>& corpus,
                                          double chunk_seconds) {
  std::vector<TrainingPair> pairs;
  for (const auto& clip : corpus)
    for (const auto& chunk : chunk_audio(clip, chunk_seconds, chunk_seconds))
      pairs.push_back(make_bwe_pair(frozen_ae, chunk));
  if (pairs.empty()) throw DataError("bwe pairs: corpus yields no full chunks");
  return pairs;
}

std::vector<TrainingPair> build_m2s_pairs(ToyVAE& frozen_ae, const std::vector<AudioBuffer>& corpus,
                                          double chunk_seconds) {
  std::vector<TrainingPair> pairs;
  for (const auto& clip : corpus)
    for (const auto& chunk : chunk_audio(clip, chunk_seconds, chunk_seconds))
      pairs.push_back(make_m2s_pair(frozen_ae, chunk));
  if (pairs.empty()) throw DataError("m2s pairs: corpus yields no full chunks");
  return pairs;
}

namespace {

template <typename State, typename StepFn, typename SaveFn>
std::vector<StepRecord> run_loop(State& st, const PairPool& pool, const TrainLoopOptions& opts,
                                 StepFn step_fn, SaveFn save_fn) {
  const std::int64_t target =
      opts.run_steps >= 0 ? std::min(st.step + opts.run_steps, st.cfg.total_steps) : st.cfg.total_steps;
  std::vector<StepRecord> trace;
  trace.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, target - st.step)));
  while (st.step < target) {
    std::vector<TrainingPair> batch;
    batch.reserve(static_cast<std::size_t>(st.cfg.batch_size));
    const std::int64_t base = st.step * st.cfg.batch_size;
    for (int j = 0; j < st.cfg.batch_size; ++j) batch.push_back(pool.at_position(base + j));
    StepRecord rec = step_fn(st, batch);
    if (opts.log && (rec.step % std::max<std::int64_t>(1, opts.log_every) == 0 || rec.step == target))
      (*opts.log) << format_step_record(rec) << "\n";
    if (!opts.checkpoint_path.empty() && opts.checkpoint_every > 0 &&
        (rec.step % opts.checkpoint_every == 0))
      save_fn(st, opts.checkpoint_path);
    trace.push_back(std::move(rec));
  }
  if (!opts.checkpoint_path.empty()) save_fn(st, opts.checkpoint_path);
  return trace;
}

}  // namespace

std::vector<StepRecord> run_bwe_training(BweTrainerState& st, const PairPool& pool,
                                         const TrainLoopOptions& opts) {
  return run_loop(
      st, pool, opts, [](BweTrainerState& s, const std::vector<TrainingPair>& b) { return train_step_bwe(s, b); },
      [](BweTrainerState& s, const std::string& p) { save_bwe_state(s, p); });
}

std::vector<StepRecord> run_m2s_training(M2sTrainerState& st, const PairPool& pool,
                                         const TrainLoopOptions& opts) {
  return run_loop(
      st, pool, opts, [](M2sTrainerState& s, const std::vector<TrainingPair>& b) { return train_step_m2s(s, b); },
      [](M2sTrainerState& s, const std::string& p) { save_m2s_state(s, p); });
}

// ---- inference ----

AudioBuffer bwe_infer_waveform(FTheta<float>& f, ToyVAE& frozen_ae, const AudioBuffer& x) {
  const int ae_rate = frozen_ae.spec().sample_rate_hz;
  if (x.sample_rate_hz() != ae_rate && x.sample_rate_hz() * 2 != ae_rate)
    throw DimensionError("bwe inference: input must be at the autoencoder rate or half of it");
  AudioBuffer x_in = x.sample_rate_hz() == ae_rate ? x : resample_sinc(x, ae_rate);
  const LatentSequence z_in = frozen_ae.encode(x_in);
  const LatentSequence z_hat = f_theta_predict_mono(f, z_in, nullptr);
  AudioBuffer y = frozen_ae.decode(z_hat);
  MatrixF trimmed = y.samples().leftCols(std::min<Eigen::Index>(y.length(), x_in.length()));
  return AudioBuffer(std::move(trimmed), ae_rate);
}

AudioBuffer m2s_infer_waveform(FTheta<float>& f, ToyVAE& frozen_ae, const AudioBuffer& mono,
                               const Eigen::VectorXf& c) {
  if (mono.channels() != 1) throw DimensionError("m2s inference: input must be mono");
  if (mono.sample_rate_hz() != frozen_ae.spec().sample_rate_hz)
    throw DimensionError("m2s inference: input rate does not match the autoencoder");
  const ConditionVector cond(Eigen::VectorXf::Zero(c.size()), Eigen::VectorXf::Ones(c.size()), c);
  const LatentSequence z_in = frozen_ae.encode(mono);
  const StackedLatent z_hat = f_theta_predict_stereo(f, z_in, cond);
  const auto [z_l, z_r] = split_streams(z_hat);
  const AudioBuffer left = frozen_ae.decode(z_l);
  const AudioBuffer right = frozen_ae.decode(z_r);
  const auto len = std::min<Eigen::Index>(std::min(left.length(), right.length()), mono.length());
  MatrixF out(2, len);
  out.row(0) = left.samples().row(0).leftCols(len);
  out.row(1) = right.samples().row(0).leftCols(len);
  return AudioBuffer(std::move(out), mono.sample_rate_hz());
}

// ---- toy VAE persistence ----

nlohmann::json vae_config_to_json(const ToyVAEConfig& cfg) {
  return nlohmann::json{{"sample_rate_hz", cfg.sample_rate_hz},
                        {"downsample_factor", cfg.downsample_factor},
                        {"latent_channels", cfg.latent_channels},
                        {"variational", cfg.variational},
                        {"widths", cfg.widths},
                        {"strides", cfg.strides},
                        {"kl_weight", cfg.kl_weight},
                        {"w_wave_l1", cfg.w_wave_l1},
                        {"w_stft", cfg.w_stft},
                        {"log_sigma_clamp", cfg.log_sigma_clamp},
                        {"stft_ffts", cfg.stft_ffts},
                        {"train_batch", cfg.train_batch},
                        {"train_lr", cfg.train_lr},
                        {"train_chunk_seconds", cfg.train_chunk_seconds}};
}

ToyVAEConfig vae_config_from_json(const nlohmann::json& j) {
  ToyVAEConfig cfg;
  cfg.sample_rate_hz = j.at("sample_rate_hz").get<int>();
  cfg.downsample_factor = j.at("downsample_factor").get<int>();
  cfg.latent_channels = j.at("latent_channels").get<int>();
  cfg.variational = j.at("variational").get<bool>();
  cfg.widths = j.at("widths").get<std::vector<int>>();
  cfg.strides = j.at("strides").get<std::vector<int>>();
  cfg.kl_weight = j.at("kl_weight").get<double>();
  cfg.w_wave_l1 = j.at("w_wave_l1").get<double>();
  cfg.w_stft = j.at("w_stft").get<double>();
  cfg.log_sigma_clamp = j.at("log_sigma_clamp").get<double>();
  cfg.stft_ffts = j.at("stft_ffts").get<std::vector<int>>();
  cfg.train_batch = j.at("train_batch").get<int>();
  cfg.train_lr = j.at("train_lr").get<double>();
  cfg.train_chunk_seconds = j.at("train_chunk_seconds").get<double>();
  cfg.validate();
  return cfg;
}

void save_vae(ToyVAE& vae, const std::string& path) {
  Checkpoint ck;
  ck.meta["kind"] = "toy_vae";
  ck.meta["config"] = vae_config_to_json(vae.config());
  auto params = vae.params();
  pack_params(ck, params);
  save_checkpoint(ck, path);
}

ToyVAE load_vae(const std::string& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (!ck.meta.contains("kind") || ck.meta.at("kind") != "toy_vae")
    throw ArtifactError("vae checkpoint: '" + path + "' does not hold an autoencoder");
  ToyVAE vae(vae_config_from_json(ck.meta.at("config")));
  auto params = vae.params();
  unpack_params(ck, params);
  return vae;
}

}  // namespace reenc
