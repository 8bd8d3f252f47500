#include "hmsyn/models.hpp"

#include "hmsyn/cca.hpp"
#include "hmsyn/fmat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace hmsyn::models {

namespace {

Matrix select_rows(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  }
  return out;
}

std::vector<Eigen::Index> masked_indices(const SpeakingMask& mask) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) idx.push_back(static_cast<Eigen::Index>(i));
  }
  return idx;
}

// Composite objective over one batch: recon MSE - alpha * total canonical
// correlation between codes and motion.
struct BatchObjective {
  double recon = 0.0;
  double corr = 0.0;
  double value() const { return recon; }
};

double cccae_objective(const nn::Mlp& encoder, const nn::Mlp& decoder,
                       const Matrix& x, const Matrix& y, double alpha,
                       const cca::CcaConfig& ccfg, double* recon_out = nullptr,
                       double* cca_out = nullptr) {
  const Matrix emb = nn::forward(encoder, x);
  const double recon = nn::mse_loss(nn::forward(decoder, emb), x);
  double corr = 0.0;
  if (alpha > 0.0 && emb.rows() >= 2 * emb.cols()) {
    corr = cca::total_correlation(emb, y, ccfg);
  }
  if (recon_out != nullptr) *recon_out = recon;
  if (cca_out != nullptr) *cca_out = corr;
  return recon - alpha * corr;
}

}  // namespace

CccaeModel train_cccae(const Matrix& frames_norm,
                       const headmotion::HeadMotionSequence& motion,
                       const SpeakingMask& mask, double alpha,
                       const nn::TrainConfig& cfg,
                       const signal::NormStats& stats, CccaeLog* log,
                       int embed_dim, int hidden_dim) {
  if (alpha < 0.0) throw UsageError("train_cccae: alpha must be >= 0");
  if (frames_norm.rows() != motion.data.rows() ||
      static_cast<Eigen::Index>(mask.size()) != frames_norm.rows()) {
    throw DataError("train_cccae: frames, motion and mask must be "
                    "frame-aligned");
  }
  if (alpha > 0.0 && cfg.batch_size < 2 * embed_dim) {
    throw DataError("train_cccae: batch size " +
                    std::to_string(cfg.batch_size) +
                    " is smaller than twice the embedding width (" +
                    std::to_string(2 * embed_dim) +
                    "); the batch covariance would be unusable");
  }

  const std::vector<Eigen::Index> speaking = masked_indices(mask);
  if (speaking.size() < static_cast<std::size_t>(2 * embed_dim)) {
    throw DataError("train_cccae: too few speaking frames");
  }
  const Matrix x_all = select_rows(frames_norm, speaking);
  const Matrix y_all = select_rows(motion.data, speaking);

  // Validation split off a seeded shuffle of the speaking frames.
  Rng rng(mix_seed(cfg.seed, 0xccca0001ULL));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x_all.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_valid = static_cast<std::size_t>(std::floor(
      cfg.validation_fraction * static_cast<double>(order.size())));
  std::vector<Eigen::Index> valid_idx(order.begin(),
                                      order.begin() + static_cast<long>(n_valid));
  std::vector<Eigen::Index> train_idx(order.begin() + static_cast<long>(n_valid),
                                      order.end());
  const Matrix x_train = select_rows(x_all, train_idx);
  const Matrix y_train = select_rows(y_all, train_idx);
  const Matrix x_valid = select_rows(x_all, valid_idx);
  const Matrix y_valid = select_rows(y_all, valid_idx);

  const int in_dim = static_cast<int>(frames_norm.cols());
  Rng init_rng(mix_seed(cfg.seed, 0xccca0002ULL));
  nn::Mlp stack = nn::make_mlp(
      {in_dim, hidden_dim, embed_dim, hidden_dim, in_dim},
      {nn::Activation::Tanh, nn::Activation::Linear, nn::Activation::Tanh,
       nn::Activation::Linear},
      init_rng);
  stack = nn::layerwise_pretrain(std::move(stack), x_train, cfg);

  nn::Mlp encoder, decoder;
  encoder.layers = {stack.layers[0], stack.layers[1]};
  decoder.layers = {stack.layers[2], stack.layers[3]};

  const cca::CcaConfig ccfg{cca::kTrainReg, 0};
  const int k = static_cast<int>(std::min<Eigen::Index>(embed_dim, 3));
  (void)k;

  auto log_epoch = [&](CccaeLog* sink) {
    if (sink == nullptr) return;
    CccaeEpochLog entry;
    entry.objective = cccae_objective(encoder, decoder, x_train, y_train,
                                      alpha, ccfg, &entry.recon_mse,
                                      &entry.cca);
    entry.valid_objective =
        (x_valid.rows() > 0)
            ? cccae_objective(encoder, decoder, x_valid, y_valid, alpha, ccfg)
            : entry.objective;
    sink->push_back(entry);
  };
  log_epoch(log);

  nn::AdamState adam_enc(encoder, cfg.adam);
  nn::AdamState adam_dec(decoder, cfg.adam);

  nn::Mlp best_enc = encoder, best_dec = decoder;
  double best_valid = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const Eigen::Index min_batch =
      (alpha > 0.0) ? static_cast<Eigen::Index>(2 * embed_dim) : 1;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double recon_sum = 0.0, cca_sum = 0.0, obj_sum = 0.0;
    std::size_t batches = 0, rows_seen = 0;
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(
          train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      if (static_cast<Eigen::Index>(stop - start) < min_batch) continue;
      std::vector<Eigen::Index> batch(train_idx.begin() + static_cast<long>(start),
                                      train_idx.begin() + static_cast<long>(stop));
      const Matrix xb = select_rows(x_all, batch);
      const Matrix yb = select_rows(y_all, batch);

      const nn::ForwardCache enc_cache = nn::forward_cached(encoder, xb);
      const Matrix& emb = enc_cache.output;
      const nn::ForwardCache dec_cache = nn::forward_cached(decoder, emb);

      const double recon = nn::mse_loss(dec_cache.output, xb);
      const Matrix dout =
          2.0 * (dec_cache.output - xb) / static_cast<double>(xb.rows());
      Matrix demb;
      const nn::Gradients dec_grads =
          nn::backward_from_output(decoder, dec_cache, dout, &demb);

      double corr = 0.0;
      if (alpha > 0.0) {
        const cca::CcaLossGrad cg = cca::cca_loss_grad(emb, yb, ccfg);
        corr = cg.value;
        demb -= alpha * cg.grad_x;
      }
      const nn::Gradients enc_grads =
          nn::backward_from_output(encoder, enc_cache, demb);

      const double obj = recon - alpha * corr;
      if (!std::isfinite(obj)) {
        throw NumericalError("train_cccae: objective is not finite");
      }
      adam_dec.step(decoder, dec_grads);
      adam_enc.step(encoder, enc_grads);

      recon_sum += recon;
      cca_sum += corr;
      obj_sum += obj;
      ++batches;
      rows_seen += batch.size();
    }
    if (batches == 0) {
      throw DataError("train_cccae: no full batch fits the training set");
    }

    CccaeEpochLog entry;
    entry.recon_mse = recon_sum / static_cast<double>(batches);
    entry.cca = cca_sum / static_cast<double>(batches);
    entry.objective = obj_sum / static_cast<double>(batches);
    entry.valid_objective =
        (x_valid.rows() > 0)
            ? cccae_objective(encoder, decoder, x_valid, y_valid, alpha, ccfg)
            : entry.objective;
    if (log != nullptr) log->push_back(entry);

    if (x_valid.rows() > 0) {
      if (entry.valid_objective < best_valid - 1e-15) {
        best_valid = entry.valid_objective;
        best_enc = encoder;
        best_dec = decoder;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (x_valid.rows() > 0 &&
      best_valid < std::numeric_limits<double>::infinity()) {
    encoder = best_enc;
    decoder = best_dec;
  }

  CccaeModel model;
  model.encoder = std::move(encoder);
  model.decoder = std::move(decoder);
  model.alpha = alpha;
  model.norm_stats = stats;
  return model;
}

signal::FeatureMatrix encode(const CccaeModel& model,
                             const Matrix& frames_norm) {
  if (frames_norm.cols() != model.encoder.input_dim()) {
    throw DataError("encode: frame width " + std::to_string(frames_norm.cols()) +
                    " != encoder input " +
                    std::to_string(model.encoder.input_dim()));
  }
  signal::FeatureMatrix out;
  out.kind = signal::FeatureKind::Embed;
  out.data = nn::forward(model.encoder, frames_norm);
  return out;
}

Matrix decode(const CccaeModel& model, const Matrix& embedded) {
  if (embedded.cols() != model.decoder.input_dim()) {
    throw DataError("decode: embedding width mismatch");
  }
  return nn::forward(model.decoder, embedded);
}

Matrix assemble_context(const Matrix& features, int half_window) {
  if (half_window < 0) throw UsageError("assemble_context: negative window");
  const Eigen::Index t_count = features.rows();
  const Eigen::Index d = features.cols();
  if (t_count < 1) throw DataError("assemble_context: empty features");
  const int width = 2 * half_window + 1;
  Matrix out(t_count, static_cast<Eigen::Index>(width) * d);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (int o = -half_window; o <= half_window; ++o) {
      const Eigen::Index src =
          std::clamp<Eigen::Index>(t + o, 0, t_count - 1);
      out.block(t, static_cast<Eigen::Index>(o + half_window) * d, 1, d) =
          features.row(src);
    }
  }
  return out;
}

RegressorModel train_regressor_on_contexts(const Matrix& contexts,
                                           const Matrix& targets,
                                           const SpeakingMask& mask,
                                           signal::FeatureKind kind,
                                           int context_half_window,
                                           const nn::TrainConfig& cfg) {
  if (contexts.rows() != targets.rows() ||
      static_cast<Eigen::Index>(mask.size()) != contexts.rows()) {
    throw DataError("train_regressor: contexts, targets and mask must be "
                    "frame-aligned");
  }
  const std::vector<Eigen::Index> speaking = masked_indices(mask);
  if (speaking.size() < 2) {
    throw DataError("train_regressor: too few speaking frames");
  }
  const Matrix x = select_rows(contexts, speaking);
  const Matrix y = select_rows(targets, speaking);

  Rng init_rng(mix_seed(cfg.seed, 0x72650001ULL));
  RegressorModel model;
  model.feature_kind = kind;
  model.context_half_window = context_half_window;
  model.net = nn::make_mlp({static_cast<int>(contexts.cols()), 256, 128, 3},
                           {nn::Activation::Relu, nn::Activation::Relu,
                            nn::Activation::Linear},
                           init_rng);
  nn::train_mse(model.net, x, y, cfg);
  return model;
}

RegressorModel train_regressor(const signal::FeatureMatrix& features,
                               const headmotion::HeadMotionSequence& motion,
                               const SpeakingMask& mask,
                               const nn::TrainConfig& cfg) {
  if (features.data.rows() != motion.data.rows()) {
    throw DataError("train_regressor: feature/motion alignment mismatch");
  }
  const Matrix contexts =
      assemble_context(features.data, kContextHalfWindow);
  return train_regressor_on_contexts(contexts, motion.data, mask,
                                     features.kind, kContextHalfWindow, cfg);
}

headmotion::HeadMotionSequence predict_motion(
    const RegressorModel& model, const signal::FeatureMatrix& features) {
  if (features.kind != model.feature_kind) {
    throw DataError("predict_motion: feature kind " +
                    signal::to_string(features.kind) +
                    " does not match model kind " +
                    signal::to_string(model.feature_kind));
  }
  if (features.data.cols() != model.feature_dim()) {
    throw DataError("predict_motion: feature width " +
                    std::to_string(features.data.cols()) +
                    " does not match model width " +
                    std::to_string(model.feature_dim()));
  }
  const Matrix contexts =
      assemble_context(features.data, model.context_half_window);
  headmotion::HeadMotionSequence out;
  out.data = nn::forward(model.net, contexts);
  return out;
}

Matrix motion_windows(const headmotion::HeadMotionSequence& motion,
                      int window) {
  const Eigen::Index t_count = motion.data.rows();
  if (t_count < window) {
    throw DataError("motion_windows: sequence shorter than one window (" +
                    std::to_string(t_count) + " < " + std::to_string(window) +
                    ")");
  }
  const Eigen::Index n_windows = t_count / window;
  Matrix out(n_windows, static_cast<Eigen::Index>(window) * 3);
  for (Eigen::Index wi = 0; wi < n_windows; ++wi) {
    for (int f = 0; f < window; ++f) {
      out.block(wi, 3 * f, 1, 3) = motion.data.row(wi * window + f);
    }
  }
  return out;
}

PostFilterModel train_postfilter_on_windows(const Matrix& windows,
                                            const nn::TrainConfig& cfg) {
  if (windows.rows() < 1) throw DataError("train_postfilter: no windows");
  Rng init_rng(mix_seed(cfg.seed, 0x70660001ULL));
  PostFilterModel model;
  model.window = static_cast<int>(windows.cols() / 3);
  model.net = nn::make_mlp(
      {static_cast<int>(windows.cols()), 64, static_cast<int>(windows.cols())},
      {nn::Activation::Tanh, nn::Activation::Linear}, init_rng);
  nn::train_mse(model.net, windows, windows, cfg);
  return model;
}

PostFilterModel train_postfilter(const headmotion::HeadMotionSequence& clean,
                                 const nn::TrainConfig& cfg) {
  return train_postfilter_on_windows(motion_windows(clean, kPostFilterWindow),
                                     cfg);
}

headmotion::HeadMotionSequence apply_postfilter(
    const PostFilterModel& model,
    const headmotion::HeadMotionSequence& motion) {
  const Eigen::Index t_count = motion.data.rows();
  const int window = model.window;
  if (t_count < window) {
    throw DataError("apply_postfilter: sequence shorter than the filter "
                    "window (" +
                    std::to_string(t_count) + " < " + std::to_string(window) +
                    ")");
  }
  const Eigen::Index n_windows = t_count - window + 1;
  Matrix slabs(n_windows, static_cast<Eigen::Index>(window) * 3);
  for (Eigen::Index s = 0; s < n_windows; ++s) {
    for (int f = 0; f < window; ++f) {
      slabs.block(s, 3 * f, 1, 3) = motion.data.row(s + f);
    }
  }
  const Matrix recon = nn::forward(model.net, slabs);

  headmotion::HeadMotionSequence out;
  out.frame_rate = motion.frame_rate;
  out.data = Matrix::Zero(t_count, 3);
  Vector counts = Vector::Zero(t_count);
  for (Eigen::Index s = 0; s < n_windows; ++s) {
    for (int f = 0; f < window; ++f) {
      out.data.row(s + f) += recon.block(s, 3 * f, 1, 3);
      counts[s + f] += 1.0;
    }
  }
  out.data.array().colwise() /= counts.array();
  return out;
}

SpeakingMask energy_speaking_mask(const signal::AudioClip& audio) {
  const signal::WaveFrameMatrix frames = signal::frame_waveform(audio);
  const Eigen::Index t_count = frames.data.rows();
  std::vector<double> log_energy(static_cast<std::size_t>(t_count));
  for (Eigen::Index t = 0; t < t_count; ++t) {
    log_energy[static_cast<std::size_t>(t)] =
        std::log(std::max(frames.data.row(t).squaredNorm(), 1e-10));
  }
  std::vector<double> sorted = log_energy;
  std::sort(sorted.begin(), sorted.end());
  const double threshold =
      sorted[static_cast<std::size_t>(0.3 * static_cast<double>(t_count))];
  SpeakingMask mask(static_cast<std::size_t>(t_count));
  for (std::size_t t = 0; t < mask.size(); ++t) {
    mask[t] = log_energy[t] > threshold ? 1 : 0;
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Model container I/O

namespace {

using pipeline::read_fmat;
using pipeline::write_fmat;

constexpr const char* kModelMagic = "hmsyn-model v1";
constexpr const char* kNormMagic = "hmsyn-norm v1";

void write_net_header(std::ostream& out, const nn::Mlp& mlp) {
  out << "net " << mlp.layers.size() << "\n";
  for (const auto& layer : mlp.layers) {
    out << "dense " << layer.in_dim() << " " << layer.out_dim() << " "
        << to_string(layer.act) << "\n";
  }
}

void write_net_blobs(std::ostream& out, const nn::Mlp& mlp) {
  for (const auto& layer : mlp.layers) {
    write_fmat(out, layer.w, pipeline::FmatDtype::F64);
    write_fmat(out, layer.b, pipeline::FmatDtype::F64);
  }
}

struct Header {
  std::vector<std::pair<std::string, std::string>> lines;

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : lines) {
      if (k == key) return &v;
    }
    return nullptr;
  }
  std::string require(const std::string& key, const std::string& path) const {
    const std::string* v = find(key);
    if (v == nullptr) {
      throw DataError("model file " + path + ": missing '" + key + "' line");
    }
    return *v;
  }
};

Header read_header(std::istream& in, const std::string& path,
                   const char* magic) {
  std::string line;
  if (!std::getline(in, line) || line != magic) {
    throw DataError(path + ": not a " + std::string(magic) + " file");
  }
  Header header;
  while (std::getline(in, line)) {
    if (line.empty()) return header;
    const auto space = line.find(' ');
    if (space == std::string::npos) {
      header.lines.emplace_back(line, "");
    } else {
      header.lines.emplace_back(line.substr(0, space), line.substr(space + 1));
    }
  }
  throw DataError(path + ": truncated header (no blank separator line)");
}

nn::Mlp read_net(std::istream& in, const Header& header,
                 const std::string& path) {
  const int n_layers = std::stoi(header.require("net", path));
  std::vector<std::array<std::string, 3>> specs;
  for (const auto& [k, v] : header.lines) {
    if (k != "dense") continue;
    std::istringstream ss(v);
    std::array<std::string, 3> spec;
    ss >> spec[0] >> spec[1] >> spec[2];
    specs.push_back(spec);
  }
  if (static_cast<int>(specs.size()) != n_layers) {
    throw DataError(path + ": layer count mismatch");
  }
  nn::Mlp mlp;
  for (const auto& spec : specs) {
    nn::DenseLayer layer;
    layer.act = nn::activation_from_string(spec[2]);
    layer.w = read_fmat(in);
    const Matrix b = read_fmat(in);
    layer.b = b.col(0);
    if (layer.w.rows() != std::stol(spec[1]) ||
        layer.w.cols() != std::stol(spec[0]) ||
        layer.b.size() != layer.w.rows()) {
      throw DataError(path + ": blob shape does not match header");
    }
    mlp.layers.push_back(std::move(layer));
  }
  mlp.validate();
  return mlp;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_cccae(const std::string& path, const CccaeModel& model) {
  auto out = open_out(path);
  out << kModelMagic << "\nkind cccae\nalpha " << format_double(model.alpha)
      << "\nnorm " << model.norm_stats.dim() << " "
      << (model.norm_stats.center ? 1 : 0) << "\nencoder_layers "
      << model.encoder.layers.size() << "\n";
  nn::Mlp stack;
  stack.layers = model.encoder.layers;
  stack.layers.insert(stack.layers.end(), model.decoder.layers.begin(),
                      model.decoder.layers.end());
  write_net_header(out, stack);
  out << "\n";
  write_net_blobs(out, stack);
  write_fmat(out, model.norm_stats.mean, pipeline::FmatDtype::F64);
  write_fmat(out, model.norm_stats.stddev, pipeline::FmatDtype::F64);
  if (!out) throw DataError("save_cccae: write failed");
}

CccaeModel load_cccae(const std::string& path) {
  auto in = open_in(path);
  const Header header = read_header(in, path, kModelMagic);
  if (header.require("kind", path) != "cccae") {
    throw DataError(path + ": not a cccae model");
  }
  CccaeModel model;
  model.alpha = std::stod(header.require("alpha", path));
  const auto n_enc = static_cast<std::size_t>(
      std::stoul(header.require("encoder_layers", path)));
  nn::Mlp stack = read_net(in, header, path);
  if (n_enc >= stack.layers.size()) {
    throw DataError(path + ": encoder_layers out of range");
  }
  model.encoder.layers.assign(stack.layers.begin(),
                              stack.layers.begin() + static_cast<long>(n_enc));
  model.decoder.layers.assign(stack.layers.begin() + static_cast<long>(n_enc),
                              stack.layers.end());

  std::istringstream norm_line(header.require("norm", path));
  Eigen::Index dim = 0;
  int center = 0;
  norm_line >> dim >> center;
  model.norm_stats.mean = read_fmat(in).col(0);
  model.norm_stats.stddev = read_fmat(in).col(0);
  model.norm_stats.center = center != 0;
  if (model.norm_stats.mean.size() != dim ||
      model.norm_stats.stddev.size() != dim) {
    throw DataError(path + ": norm stats shape mismatch");
  }
  return model;
}

void save_regressor(const std::string& path, const RegressorModel& model) {
  auto out = open_out(path);
  out << kModelMagic << "\nkind regressor\nfeature "
      << to_string(model.feature_kind) << "\ncontext "
      << model.context_half_window << "\n";
  write_net_header(out, model.net);
  out << "\n";
  write_net_blobs(out, model.net);
  if (!out) throw DataError("save_regressor: write failed");
}

RegressorModel load_regressor(const std::string& path) {
  auto in = open_in(path);
  const Header header = read_header(in, path, kModelMagic);
  if (header.require("kind", path) != "regressor") {
    throw DataError(path + ": not a regressor model");
  }
  RegressorModel model;
  model.feature_kind =
      signal::feature_kind_from_string(header.require("feature", path));
  model.context_half_window = std::stoi(header.require("context", path));
  model.net = read_net(in, header, path);
  return model;
}

void save_postfilter(const std::string& path, const PostFilterModel& model) {
  auto out = open_out(path);
  out << kModelMagic << "\nkind postfilter\nwindow " << model.window << "\n";
  write_net_header(out, model.net);
  out << "\n";
  write_net_blobs(out, model.net);
  if (!out) throw DataError("save_postfilter: write failed");
}

PostFilterModel load_postfilter(const std::string& path) {
  auto in = open_in(path);
  const Header header = read_header(in, path, kModelMagic);
  if (header.require("kind", path) != "postfilter") {
    throw DataError(path + ": not a postfilter model");
  }
  PostFilterModel model;
  model.window = std::stoi(header.require("window", path));
  model.net = read_net(in, header, path);
  return model;
}

void save_norm_stats(const std::string& path, const signal::NormStats& stats,
                     signal::FeatureKind kind) {
  auto out = open_out(path);
  out << kNormMagic << "\nkind " << to_string(kind) << "\ncenter "
      << (stats.center ? 1 : 0) << "\ndim " << stats.dim() << "\n\n";
  write_fmat(out, stats.mean, pipeline::FmatDtype::F64);
  write_fmat(out, stats.stddev, pipeline::FmatDtype::F64);
  if (!out) throw DataError("save_norm_stats: write failed");
}

std::pair<signal::NormStats, signal::FeatureKind> load_norm_stats(
    const std::string& path) {
  auto in = open_in(path);
  const Header header = read_header(in, path, kNormMagic);
  signal::NormStats stats;
  const signal::FeatureKind kind =
      signal::feature_kind_from_string(header.require("kind", path));
  stats.center = std::stoi(header.require("center", path)) != 0;
  stats.mean = read_fmat(in).col(0);
  stats.stddev = read_fmat(in).col(0);
  if (stats.mean.size() != std::stol(header.require("dim", path))) {
    throw DataError(path + ": stats dimension mismatch");
  }
  return {std::move(stats), kind};
}

}  // namespace hmsyn::models
