#include "hmsyn/pipeline.hpp"

#include "hmsyn/audio.hpp"
#include "hmsyn/cca.hpp"
#include "hmsyn/fmat.hpp"
#include "hmsyn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hmsyn::pipeline {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).string();
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config: bad numeric value for '" + key + "': " + value);
  }
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != std::floor(v)) {
    throw UsageError("config: '" + key + "' must be an integer");
  }
  return static_cast<int>(v);
}

// Any stage failure aborts the run with the stage name in front.
[[noreturn]] void rethrow_stage(const std::string& name, const Error& err) {
  throw DataError("stage " + name + ": " + err.what());
}

}  // namespace

std::vector<ManifestEntry> Manifest::split(const std::string& name) const {
  std::vector<ManifestEntry> out;
  for (const auto& entry : entries) {
    if (name == "all" || entry.split == name) out.push_back(entry);
  }
  return out;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_manifest: cannot open " + path);
  const std::string base_dir = fs::path(path).parent_path().string();
  std::string line;
  if (!std::getline(in, line) ||
      split_line(line, ',') !=
          std::vector<std::string>{"id", "audio", "motion", "mask", "split"}) {
    throw DataError("load_manifest: expected header id,audio,motion,mask,split "
                    "in " + path);
  }
  Manifest manifest;
  std::vector<std::string> seen_ids;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_line(line, ',');
    if (fields.size() != 5) {
      throw DataError("load_manifest: row width mismatch in " + path);
    }
    ManifestEntry entry;
    entry.id = trim(fields[0]);
    entry.audio_path = resolve(base_dir, trim(fields[1]));
    entry.motion_path = resolve(base_dir, trim(fields[2]));
    entry.mask_path = resolve(base_dir, trim(fields[3]));
    entry.split = trim(fields[4]);
    if (entry.split != "train" && entry.split != "valid" &&
        entry.split != "test") {
      throw DataError("load_manifest: unknown split '" + entry.split +
                      "' for id " + entry.id);
    }
    if (std::find(seen_ids.begin(), seen_ids.end(), entry.id) !=
        seen_ids.end()) {
      throw DataError("load_manifest: duplicate id " + entry.id);
    }
    seen_ids.push_back(entry.id);
    if (!fs::exists(entry.audio_path)) {
      throw DataError("load_manifest: missing audio file " + entry.audio_path);
    }
    if (!fs::exists(entry.motion_path)) {
      throw DataError("load_manifest: missing motion file " +
                      entry.motion_path);
    }
    if (!entry.mask_path.empty() && !fs::exists(entry.mask_path)) {
      throw DataError("load_manifest: missing mask file " + entry.mask_path);
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_manifest: cannot open " + path);
  out << "id,audio,motion,mask,split\n";
  for (const auto& entry : manifest.entries) {
    out << entry.id << "," << entry.audio_path << "," << entry.motion_path
        << "," << entry.mask_path << "," << entry.split << "\n";
  }
  if (!out) throw DataError("save_manifest: write failed");
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_config_file: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("read_config_file: expected key = value, got '" + line +
                      "'");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_config(RunConfig& cfg,
                  const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "alpha") cfg.alpha = to_double(key, value);
    else if (key == "embed_dim") cfg.embed_dim = to_int(key, value);
    else if (key == "hidden_dim") cfg.hidden_dim = to_int(key, value);
    else if (key == "context") cfg.context_half_window = to_int(key, value);
    else if (key == "cca_window") cfg.cca_window = to_int(key, value);
    else if (key == "postfilter_window") cfg.postfilter_window = to_int(key, value);
    else if (key == "feature") cfg.feature = signal::feature_kind_from_string(value);
    else if (key == "use_mask") cfg.use_mask = to_int(key, value) != 0;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_double(key, value));
    else if (key == "batch_size") cfg.batch_size = to_int(key, value);
    else if (key == "cccae_epochs") cfg.cccae_epochs = to_int(key, value);
    else if (key == "pretrain_epochs") cfg.pretrain_epochs = to_int(key, value);
    else if (key == "regressor_epochs") cfg.regressor_epochs = to_int(key, value);
    else if (key == "postfilter_epochs") cfg.postfilter_epochs = to_int(key, value);
    else if (key == "regressor_stride") cfg.regressor_stride = to_int(key, value);
    else if (key == "patience") cfg.patience = to_int(key, value);
    else if (key == "validation_fraction") cfg.validation_fraction = to_double(key, value);
    else if (key == "learning_rate") cfg.learning_rate = to_double(key, value);
    else if (key == "duration_s" || key == "utterances" ||
             key == "latent_cutoff_hz" || key == "nuisance_tones" ||
             key == "motion_noise" || key == "audio_noise" ||
             key == "signal_tone_amp" || key == "duty_cycle") {
      // synthesis keys; ignored by run configs
    } else {
      throw UsageError("config: unknown key '" + key + "'");
    }
  }
}

void apply_config(SyntheticSpec& spec,
                  const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "duration_s") spec.duration_s = to_double(key, value);
    else if (key == "utterances") spec.utterances = to_int(key, value);
    else if (key == "latent_cutoff_hz") spec.latent_cutoff_hz = to_double(key, value);
    else if (key == "nuisance_tones") spec.nuisance_tones = to_int(key, value);
    else if (key == "motion_noise") spec.motion_noise = to_double(key, value);
    else if (key == "audio_noise") spec.audio_noise = to_double(key, value);
    else if (key == "signal_tone_amp") spec.signal_tone_amp = to_double(key, value);
    else if (key == "duty_cycle") spec.duty_cycle = to_double(key, value);
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(to_double(key, value));
    else {
      // run-config keys are legal in a shared file
      RunConfig probe;
      apply_config(probe, {{key, value}});
    }
  }
}

models::SpeakingMask read_mask_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_mask_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      split_line(line, ',') != std::vector<std::string>{"t", "speaking"}) {
    throw DataError("read_mask_csv: expected header t,speaking in " + path);
  }
  models::SpeakingMask mask;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_line(line, ',');
    if (fields.size() != 2) {
      throw DataError("read_mask_csv: row width mismatch in " + path);
    }
    mask.push_back(fields[1] == "0" ? 0 : 1);
  }
  return mask;
}

void write_mask_csv(const std::string& path, const models::SpeakingMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_mask_csv: cannot open " + path);
  out << "t,speaking\n";
  char buf[64];
  for (std::size_t t = 0; t < mask.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%.6f,%d\n",
                  static_cast<double>(t) / 100.0, mask[t] ? 1 : 0);
    out << buf;
  }
  if (!out) throw DataError("write_mask_csv: write failed");
}

LoadedUtterance load_utterance(const ManifestEntry& entry, bool use_mask) {
  LoadedUtterance utt;
  utt.id = entry.id;
  if (entry.audio_path.ends_with(".fmat")) {
    utt.frames.data = read_fmat(entry.audio_path);
    if (utt.frames.data.cols() != signal::kFrameLen) {
      throw DataError("load_utterance: frame matrix " + entry.audio_path +
                      " must have " + std::to_string(signal::kFrameLen) +
                      " columns");
    }
  } else {
    const signal::AudioClip clip = signal::read_wav(entry.audio_path);
    utt.frames = signal::frame_waveform(clip);
  }
  utt.motion = headmotion::read_motion_csv(entry.motion_path);

  if (!use_mask) {
    utt.mask.assign(static_cast<std::size_t>(utt.frames.data.rows()), 1);
  } else if (!entry.mask_path.empty()) {
    utt.mask = read_mask_csv(entry.mask_path);
  } else {
    const signal::AudioClip clip = signal::read_wav(entry.audio_path);
    utt.mask = models::energy_speaking_mask(clip);
  }

  const Eigen::Index t_common = std::min(
      {utt.frames.data.rows(), utt.motion.data.rows(),
       static_cast<Eigen::Index>(utt.mask.size())});
  const Eigen::Index t_max = std::max(
      {utt.frames.data.rows(), utt.motion.data.rows(),
       static_cast<Eigen::Index>(utt.mask.size())});
  if (t_max - t_common > 5) {
    warn("utterance " + entry.id + ": audio/motion lengths differ by " +
         std::to_string(t_max - t_common) + " frames; truncating to " +
         std::to_string(t_common));
  }
  if (t_common < 1) throw DataError("load_utterance: empty utterance " + entry.id);
  utt.frames.data = utt.frames.data.topRows(t_common).eval();
  utt.motion.data = utt.motion.data.topRows(t_common).eval();
  utt.mask.resize(static_cast<std::size_t>(t_common));
  return utt;
}

nn::TrainConfig cccae_train_config(const RunConfig& cfg) {
  nn::TrainConfig train;
  train.batch_size = cfg.batch_size;
  train.epochs = cfg.cccae_epochs;
  train.pretrain_epochs = cfg.pretrain_epochs;
  train.seed = mix_seed(cfg.seed, 0x01);
  train.patience = cfg.patience;
  train.validation_fraction = cfg.validation_fraction;
  train.adam.lr = cfg.learning_rate;
  return train;
}

nn::TrainConfig regressor_train_config(const RunConfig& cfg) {
  nn::TrainConfig train;
  train.batch_size = cfg.batch_size;
  train.epochs = cfg.regressor_epochs;
  train.pretrain_epochs = 0;
  train.seed = mix_seed(cfg.seed, 0x02);
  train.patience = cfg.patience;
  train.validation_fraction = cfg.validation_fraction;
  train.adam.lr = cfg.learning_rate;
  return train;
}

nn::TrainConfig postfilter_train_config(const RunConfig& cfg) {
  nn::TrainConfig train;
  train.batch_size = 64;
  train.epochs = cfg.postfilter_epochs;
  train.pretrain_epochs = 0;
  train.seed = mix_seed(cfg.seed, 0x03);
  train.patience = cfg.patience;
  train.validation_fraction = cfg.validation_fraction;
  train.adam.lr = cfg.learning_rate;
  return train;
}

namespace {

// Extracts the configured feature kind (not yet normalized).
Matrix raw_features(const LoadedUtterance& utt, signal::FeatureKind kind,
                    const ManifestEntry& entry) {
  switch (kind) {
    case signal::FeatureKind::Wave100:
    case signal::FeatureKind::Embed:
      return utt.frames.data;
    case signal::FeatureKind::Mfcc39:
    case signal::FeatureKind::Fbank27:
    case signal::FeatureKind::F0e6: {
      const signal::AudioClip clip = signal::read_wav(entry.audio_path);
      signal::FeatureMatrix f;
      if (kind == signal::FeatureKind::Mfcc39) f = signal::compute_mfcc(clip);
      if (kind == signal::FeatureKind::Fbank27) f = signal::compute_fbank(clip);
      if (kind == signal::FeatureKind::F0e6) f = signal::compute_f0_energy(clip);
      return f.data.topRows(
          std::min(f.data.rows(), utt.frames.data.rows())).eval();
    }
    case signal::FeatureKind::Generic:
      throw UsageError("raw_features: generic kind has no extractor");
  }
  throw UsageError("raw_features: unknown kind");
}

struct TrainData {
  Matrix features;  // stacked masked-aligned features (unnormalized)
  Matrix motion;
  models::SpeakingMask mask;
  std::vector<Eigen::Index> utterance_offsets;
  std::vector<Eigen::Index> utterance_lengths;
};

TrainData load_split(const Manifest& manifest, const std::string& split_name,
                     const RunConfig& cfg, const Manifest& full) {
  (void)full;
  const auto entries = manifest.split(split_name);
  if (entries.empty()) {
    throw DataError("no '" + split_name + "' entries in the manifest");
  }
  TrainData data;
  std::vector<Matrix> feats, motions;
  Eigen::Index total = 0;
  for (const auto& entry : entries) {
    const LoadedUtterance utt = load_utterance(entry, cfg.use_mask);
    Matrix f = raw_features(utt, cfg.feature, entry);
    const Eigen::Index t_common = std::min(f.rows(), utt.motion.data.rows());
    data.utterance_offsets.push_back(total);
    data.utterance_lengths.push_back(t_common);
    feats.push_back(f.topRows(t_common).eval());
    motions.push_back(utt.motion.data.topRows(t_common).eval());
    for (Eigen::Index i = 0; i < t_common; ++i) {
      data.mask.push_back(utt.mask[static_cast<std::size_t>(i)]);
    }
    total += t_common;
  }
  data.features.resize(total, feats.front().cols());
  data.motion.resize(total, 3);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    data.features.middleRows(at, feats[i].rows()) = feats[i];
    data.motion.middleRows(at, feats[i].rows()) = motions[i];
    at += feats[i].rows();
  }
  return data;
}

// Epoch 0 is evaluated before any update, so runs that differ only in alpha
// share every logged term except the weighted objective there.
void write_run_log(const std::string& path, const models::CccaeLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("run log: cannot open " + path);
  char buf[256];
  for (std::size_t e = 0; e < log.size(); ++e) {
    std::snprintf(buf, sizeof(buf),
                  "cccae epoch %zu objective %.12g recon %.12g cca %.12g "
                  "valid %.12g\n",
                  e, log[e].objective, log[e].recon_mse, log[e].cca,
                  log[e].valid_objective);
    out << buf;
  }
}

}  // namespace

void run_training(const Manifest& manifest, const RunConfig& cfg,
                  const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string stage_names[] = {"load-train-data", "normalization-stats",
                                     "train-cccae", "train-regressor",
                                     "train-postfilter"};

  TrainData train;
  try {
    train = load_split(manifest, "train", cfg, manifest);
  } catch (const Error& e) {
    rethrow_stage(stage_names[0], e);
  }

  // Stats come from the train split only; valid/test reuse them as-is.
  signal::NormStats stats;
  try {
    stats = signal::fit_norm_stats(
        train.features, cfg.feature != signal::FeatureKind::Wave100 &&
                            cfg.feature != signal::FeatureKind::Embed);
    models::save_norm_stats(out_dir + "/norm.stats", stats,
                            cfg.feature == signal::FeatureKind::Embed
                                ? signal::FeatureKind::Wave100
                                : cfg.feature);
  } catch (const Error& e) {
    rethrow_stage(stage_names[1], e);
  }
  const Matrix features_norm = signal::apply_norm_stats(train.features, stats);

  models::CccaeLog cccae_log;
  std::optional<models::CccaeModel> cccae;
  Matrix regressor_features = features_norm;
  if (cfg.feature == signal::FeatureKind::Embed) {
    try {
      headmotion::HeadMotionSequence motion;
      motion.data = train.motion;
      cccae = models::train_cccae(features_norm, motion, train.mask, cfg.alpha,
                                  cccae_train_config(cfg), stats, &cccae_log,
                                  cfg.embed_dim, cfg.hidden_dim);
      models::save_cccae(out_dir + "/cccae.model", *cccae);
      regressor_features = models::encode(*cccae, features_norm).data;
    } catch (const Error& e) {
      rethrow_stage(stage_names[2], e);
    }
  }

  try {
    // Contexts are assembled per utterance so windows never straddle a
    // boundary, then training frames are strided to keep the set small.
    std::vector<Matrix> ctx_blocks;
    models::SpeakingMask mask_strided;
    std::vector<Matrix> target_blocks;
    for (std::size_t ui = 0; ui < train.utterance_offsets.size(); ++ui) {
      const Eigen::Index off = train.utterance_offsets[ui];
      const Eigen::Index len = train.utterance_lengths[ui];
      const Matrix ctx = models::assemble_context(
          regressor_features.middleRows(off, len), cfg.context_half_window);
      const Eigen::Index n_sel = (len + cfg.regressor_stride - 1) /
                                 cfg.regressor_stride;
      Matrix ctx_sel(n_sel, ctx.cols());
      Matrix tgt_sel(n_sel, 3);
      Eigen::Index at = 0;
      for (Eigen::Index t = 0; t < len; t += cfg.regressor_stride) {
        ctx_sel.row(at) = ctx.row(t);
        tgt_sel.row(at) = train.motion.row(off + t);
        mask_strided.push_back(train.mask[static_cast<std::size_t>(off + t)]);
        ++at;
      }
      ctx_blocks.push_back(std::move(ctx_sel));
      target_blocks.push_back(std::move(tgt_sel));
    }
    Eigen::Index total = 0;
    for (const auto& b : ctx_blocks) total += b.rows();
    Matrix contexts(total, ctx_blocks.front().cols());
    Matrix targets(total, 3);
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < ctx_blocks.size(); ++i) {
      contexts.middleRows(at, ctx_blocks[i].rows()) = ctx_blocks[i];
      targets.middleRows(at, ctx_blocks[i].rows()) = target_blocks[i];
      at += ctx_blocks[i].rows();
    }
    const models::RegressorModel regressor =
        models::train_regressor_on_contexts(
            contexts, targets, mask_strided,
            cfg.feature == signal::FeatureKind::Embed
                ? signal::FeatureKind::Embed
                : cfg.feature,
            cfg.context_half_window, regressor_train_config(cfg));
    models::save_regressor(out_dir + "/regressor.model", regressor);
  } catch (const Error& e) {
    rethrow_stage(stage_names[3], e);
  }

  try {
    std::vector<Matrix> window_blocks;
    Eigen::Index n_windows = 0;
    for (std::size_t ui = 0; ui < train.utterance_offsets.size(); ++ui) {
      headmotion::HeadMotionSequence clean;
      clean.data = train.motion.middleRows(train.utterance_offsets[ui],
                                           train.utterance_lengths[ui]);
      window_blocks.push_back(
          models::motion_windows(clean, cfg.postfilter_window));
      n_windows += window_blocks.back().rows();
    }
    Matrix windows(n_windows, window_blocks.front().cols());
    Eigen::Index at = 0;
    for (const auto& b : window_blocks) {
      windows.middleRows(at, b.rows()) = b;
      at += b.rows();
    }
    const models::PostFilterModel postfilter =
        models::train_postfilter_on_windows(windows,
                                            postfilter_train_config(cfg));
    models::save_postfilter(out_dir + "/postfilter.model", postfilter);
  } catch (const Error& e) {
    rethrow_stage(stage_names[4], e);
  }

  write_run_log(out_dir + "/run.log", cccae_log);
}

void run_prediction(const Manifest& manifest, const std::string& split,
                    const std::string& models_dir, const PredictFlags& flags,
                    const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto entries = manifest.split(split);
  if (entries.empty()) {
    throw DataError("run_prediction: no '" + split + "' entries");
  }
  const auto [stats, stats_kind] =
      models::load_norm_stats(models_dir + "/norm.stats");
  const models::RegressorModel regressor =
      models::load_regressor(models_dir + "/regressor.model");
  std::optional<models::CccaeModel> cccae;
  if (regressor.feature_kind == signal::FeatureKind::Embed) {
    cccae = models::load_cccae(models_dir + "/cccae.model");
  }
  std::optional<models::PostFilterModel> postfilter;
  if (flags.postfilter) {
    postfilter = models::load_postfilter(models_dir + "/postfilter.model");
  }

  for (const auto& entry : entries) {
    // Synthesis covers every frame; the mask only matters in training.
    const LoadedUtterance utt = load_utterance(entry, false);
    signal::FeatureMatrix features;
    if (regressor.feature_kind == signal::FeatureKind::Embed) {
      const Matrix frames_norm =
          signal::apply_norm_stats(utt.frames.data, cccae->norm_stats);
      features = models::encode(*cccae, frames_norm);
    } else {
      Matrix raw = raw_features(utt, regressor.feature_kind, entry);
      features.kind = regressor.feature_kind;
      features.data = signal::apply_norm_stats(raw, stats);
    }
    headmotion::HeadMotionSequence pred =
        models::predict_motion(regressor, features);
    if (postfilter.has_value() &&
        pred.data.rows() >= postfilter->window) {
      pred = models::apply_postfilter(*postfilter, pred);
    }
    headmotion::write_motion_csv(out_dir + "/" + entry.id + ".pred.csv", pred);
  }
}

void run_evaluation(const Manifest& manifest, const std::string& split,
                    const std::string& pred_dir, const std::string& out_dir,
                    const EvalOptions& options) {
  fs::create_directories(out_dir);
  const auto entries = manifest.split(split);
  if (entries.empty()) {
    throw DataError("run_evaluation: no '" + split + "' entries");
  }

  std::vector<metrics::EvalReport> reports;
  std::vector<headmotion::HeadMotionSequence> truths;
  truths.reserve(entries.size());
  for (const auto& entry : entries) {
    truths.push_back(headmotion::read_motion_csv(entry.motion_path));
  }

  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& entry = entries[i];
    const std::string pred_path = pred_dir + "/" + entry.id + ".pred.csv";
    if (!fs::exists(pred_path)) {
      throw DataError("run_evaluation: missing prediction for utterance '" +
                      entry.id + "' (" + pred_path + ")");
    }
    headmotion::HeadMotionSequence pred =
        headmotion::read_motion_csv(pred_path);
    headmotion::HeadMotionSequence truth = truths[i];
    const Eigen::Index t_common =
        std::min(pred.data.rows(), truth.data.rows());
    if (std::max(pred.data.rows(), truth.data.rows()) - t_common > 5) {
      warn("evaluation " + entry.id + ": prediction/truth length mismatch; "
           "truncating");
    }
    pred.data = pred.data.topRows(t_common).eval();
    truth.data = truth.data.topRows(t_common).eval();

    metrics::EvalConfig ecfg;
    ecfg.cca_window = options.cca_window;
    ecfg.system = options.system;
    ecfg.seed = options.seed;
    metrics::EvalReport report = metrics::evaluate_system(pred, truth, ecfg);
    if (options.with_chance && entries.size() >= 2) {
      const auto& unrelated = truths[(i + 1) % truths.size()];
      report.chance = metrics::chance_score(truth, unrelated,
                                            options.cca_window, options.seed);
    }
    metrics::write_report(out_dir + "/" + entry.id + ".eval.json", report);
    reports.push_back(std::move(report));
  }

  double mean_nmse = 0.0, mean_cca = 0.0, mean_chance = 0.0;
  int n_chance = 0;
  for (const auto& r : reports) {
    mean_nmse += r.nmse;
    mean_cca += r.local_cca;
    if (r.chance.has_value()) {
      mean_chance += *r.chance;
      ++n_chance;
    }
  }
  mean_nmse /= static_cast<double>(reports.size());
  mean_cca /= static_cast<double>(reports.size());

  std::ofstream out(out_dir + "/summary.txt", std::ios::binary);
  if (!out) throw DataError("run_evaluation: cannot open summary.txt");
  char buf[256];
  out << "system            n      NMSE       CCA    chance\n";
  if (n_chance > 0) {
    std::snprintf(buf, sizeof(buf), "%-15s %3zu %9.4f %9.4f %9.4f\n",
                  options.system.c_str(), reports.size(), mean_nmse, mean_cca,
                  mean_chance / n_chance);
  } else {
    std::snprintf(buf, sizeof(buf), "%-15s %3zu %9.4f %9.4f %9s\n",
                  options.system.c_str(), reports.size(), mean_nmse, mean_cca,
                  "-");
  }
  out << buf;
  if (!out) throw DataError("run_evaluation: write failed");
}

void run_feature_extraction(const Manifest& manifest, const std::string& split,
                            signal::FeatureKind kind,
                            const std::string& out_dir) {
  if (kind == signal::FeatureKind::Embed ||
      kind == signal::FeatureKind::Generic) {
    throw UsageError("feature extraction handles mfcc39, fbank27, f0e6 and "
                     "wave100; embeddings come from the embed command");
  }
  fs::create_directories(out_dir);
  const auto entries = manifest.split(split);
  if (entries.empty()) {
    throw DataError("run_feature_extraction: no '" + split + "' entries");
  }
  for (const auto& entry : entries) {
    const signal::AudioClip clip = signal::read_wav(entry.audio_path);
    signal::FeatureMatrix f;
    switch (kind) {
      case signal::FeatureKind::Mfcc39: f = signal::compute_mfcc(clip); break;
      case signal::FeatureKind::Fbank27: f = signal::compute_fbank(clip); break;
      case signal::FeatureKind::F0e6: f = signal::compute_f0_energy(clip); break;
      case signal::FeatureKind::Wave100:
        f = signal::to_features(signal::frame_waveform(clip));
        break;
      default: break;
    }
    write_fmat(out_dir + "/" + entry.id + "." + to_string(kind) + ".fmat",
               f.data);
  }
}

}  // namespace hmsyn::pipeline
