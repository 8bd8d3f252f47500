#include "hmsyn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hmsyn::nn {

namespace {

Matrix apply_activation(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::Tanh: return z.array().tanh();
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Linear: return z;
  }
  return z;
}

// Derivative as a function of the pre-activation.
Matrix activation_grad(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::Tanh: return 1.0 - z.array().tanh().square();
    case Activation::Relu:
      return (z.array() > 0.0).cast<double>();
    case Activation::Linear: return Matrix::Ones(z.rows(), z.cols());
  }
  return Matrix::Ones(z.rows(), z.cols());
}

bool widths_mirror(const std::vector<int>& widths) {
  if (widths.size() < 3 || widths.size() % 2 == 0) return false;
  for (std::size_t i = 0; i < widths.size() / 2; ++i) {
    if (widths[i] != widths[widths.size() - 1 - i]) return false;
  }
  return true;
}

}  // namespace

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Linear: return "linear";
  }
  return "linear";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "linear") return Activation::Linear;
  throw DataError("unknown activation: " + name);
}

std::vector<int> Mlp::widths() const {
  std::vector<int> w;
  w.reserve(layers.size() + 1);
  w.push_back(static_cast<int>(layers.front().in_dim()));
  for (const auto& layer : layers) {
    w.push_back(static_cast<int>(layer.out_dim()));
  }
  return w;
}

void Mlp::validate() const {
  if (layers.empty()) throw DataError("mlp: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].b.size() != layers[i].w.rows()) {
      throw DataError("mlp: bias size mismatch at layer " + std::to_string(i));
    }
    if (i > 0 && layers[i].in_dim() != layers[i - 1].out_dim()) {
      throw DataError("mlp: width mismatch between layers " +
                      std::to_string(i - 1) + " and " + std::to_string(i));
    }
    if (!layers[i].w.allFinite() || !layers[i].b.allFinite()) {
      throw NumericalError("mlp: non-finite parameters at layer " +
                           std::to_string(i));
    }
  }
}

DenseLayer make_dense(int in, int out, Activation act, Rng& rng) {
  if (in < 1 || out < 1) throw UsageError("make_dense: widths must be >= 1");
  DenseLayer layer;
  layer.act = act;
  layer.b = Vector::Zero(out);
  layer.w.resize(out, in);
  const double bound = std::sqrt(6.0 / (in + out));
  for (Eigen::Index r = 0; r < out; ++r) {
    for (Eigen::Index c = 0; c < in; ++c) {
      layer.w(r, c) = uniform(rng, -bound, bound);
    }
  }
  return layer;
}

Mlp make_mlp(const std::vector<int>& widths,
             const std::vector<Activation>& acts, Rng& rng) {
  if (widths.size() < 2 || acts.size() != widths.size() - 1) {
    throw UsageError("make_mlp: need N+1 widths for N activations");
  }
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    mlp.layers.push_back(
        make_dense(widths[i], widths[i + 1], acts[i], rng));
  }
  return mlp;
}

Matrix forward(const Mlp& mlp, const Matrix& batch) {
  if (batch.cols() != mlp.input_dim()) {
    throw DataError("forward: batch width " + std::to_string(batch.cols()) +
                    " != input width " + std::to_string(mlp.input_dim()));
  }
  Matrix a = batch;
  for (const auto& layer : mlp.layers) {
    a = apply_activation(
        ((a * layer.w.transpose()).rowwise() + layer.b.transpose()).eval(),
        layer.act);
  }
  return a;
}

ForwardCache forward_cached(const Mlp& mlp, const Matrix& batch) {
  if (batch.cols() != mlp.input_dim()) {
    throw DataError("forward: batch width " + std::to_string(batch.cols()) +
                    " != input width " + std::to_string(mlp.input_dim()));
  }
  ForwardCache cache;
  cache.inputs.reserve(mlp.layers.size());
  cache.preacts.reserve(mlp.layers.size());
  Matrix a = batch;
  for (const auto& layer : mlp.layers) {
    cache.inputs.push_back(a);
    Matrix z = (a * layer.w.transpose()).rowwise() + layer.b.transpose();
    cache.preacts.push_back(z);
    a = apply_activation(z, layer.act);
  }
  cache.output = std::move(a);
  return cache;
}

Gradients backward_from_output(const Mlp& mlp, const ForwardCache& cache,
                               const Matrix& dout, Matrix* dinput) {
  const auto n_layers = mlp.layers.size();
  Gradients grads;
  grads.w.resize(n_layers);
  grads.b.resize(n_layers);
  Matrix delta = dout;
  for (std::size_t i = n_layers; i-- > 0;) {
    const DenseLayer& layer = mlp.layers[i];
    delta = delta.cwiseProduct(activation_grad(cache.preacts[i], layer.act));
    grads.w[i] = delta.transpose() * cache.inputs[i];
    grads.b[i] = delta.colwise().sum();
    if (i > 0 || dinput != nullptr) {
      delta = (delta * layer.w).eval();
    }
  }
  if (dinput != nullptr) *dinput = std::move(delta);
  return grads;
}

double mse_loss(const Matrix& output, const Matrix& targets) {
  if (output.rows() != targets.rows() || output.cols() != targets.cols()) {
    throw DataError("mse_loss: shape mismatch");
  }
  return (output - targets).squaredNorm() / static_cast<double>(output.rows());
}

MseBackward backward_mse(const Mlp& mlp, const Matrix& batch,
                         const Matrix& targets) {
  if (targets.cols() != mlp.output_dim()) {
    throw DataError("backward_mse: target width mismatch");
  }
  const ForwardCache cache = forward_cached(mlp, batch);
  MseBackward result;
  result.loss = mse_loss(cache.output, targets);
  const Matrix dout =
      2.0 * (cache.output - targets) / static_cast<double>(batch.rows());
  result.grads = backward_from_output(mlp, cache, dout);
  return result;
}

AdamState::AdamState(const Mlp& mlp, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& layer : mlp.layers) {
    mw_.push_back(Matrix::Zero(layer.w.rows(), layer.w.cols()));
    vw_.push_back(Matrix::Zero(layer.w.rows(), layer.w.cols()));
    mb_.push_back(Vector::Zero(layer.b.size()));
    vb_.push_back(Vector::Zero(layer.b.size()));
  }
}

void AdamState::step(Mlp& mlp, const Gradients& grads) {
  if (grads.w.size() != mlp.layers.size()) {
    throw DataError("adam_step: gradient/layer count mismatch");
  }
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, step_count_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, step_count_);
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    mw_[i] = cfg_.beta1 * mw_[i] + (1.0 - cfg_.beta1) * grads.w[i];
    vw_[i] = cfg_.beta2 * vw_[i].array().matrix() +
             (1.0 - cfg_.beta2) * grads.w[i].array().square().matrix();
    mlp.layers[i].w.array() -=
        cfg_.lr * (mw_[i].array() / bc1) /
        ((vw_[i].array() / bc2).sqrt() + cfg_.eps);

    mb_[i] = cfg_.beta1 * mb_[i] + (1.0 - cfg_.beta1) * grads.b[i];
    vb_[i] = cfg_.beta2 * vb_[i].array().matrix() +
             (1.0 - cfg_.beta2) * grads.b[i].array().square().matrix();
    mlp.layers[i].b.array() -=
        cfg_.lr * (mb_[i].array() / bc1) /
        ((vb_[i].array() / bc2).sqrt() + cfg_.eps);
  }
}

TrainLog train_mse(Mlp& mlp, const Matrix& inputs, const Matrix& targets,
                   const TrainConfig& cfg) {
  if (inputs.rows() != targets.rows()) {
    throw DataError("train_mse: input/target row mismatch");
  }
  if (inputs.rows() < 1) throw DataError("train_mse: empty training set");
  if (cfg.batch_size < 1 || cfg.epochs < 0) {
    throw UsageError("train_mse: batch_size >= 1 and epochs >= 0 required");
  }
  mlp.validate();

  Rng rng(mix_seed(cfg.seed, 0x7261696eULL));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_valid = static_cast<Eigen::Index>(
      std::floor(cfg.validation_fraction * static_cast<double>(inputs.rows())));
  std::vector<Eigen::Index> valid_idx(order.begin(), order.begin() + n_valid);
  std::vector<Eigen::Index> train_idx(order.begin() + n_valid, order.end());
  if (train_idx.empty()) {
    train_idx = std::move(valid_idx);
    valid_idx.clear();
  }

  auto gather = [](const Matrix& m, const std::vector<Eigen::Index>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    }
    return out;
  };
  const Matrix x_valid = gather(inputs, valid_idx);
  const Matrix y_valid = gather(targets, valid_idx);

  AdamState adam(mlp, cfg.adam);
  TrainLog log;
  Mlp best = mlp;
  double best_valid = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double loss_sum = 0.0;
    std::size_t rows_seen = 0;
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(
          train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Eigen::Index> batch_idx(train_idx.begin() + start,
                                          train_idx.begin() + stop);
      const Matrix xb = gather(inputs, batch_idx);
      const Matrix yb = gather(targets, batch_idx);
      MseBackward back = backward_mse(mlp, xb, yb);
      if (!std::isfinite(back.loss)) {
        throw NumericalError("train_mse: loss is not finite");
      }
      adam.step(mlp, back.grads);
      loss_sum += back.loss * static_cast<double>(batch_idx.size());
      rows_seen += batch_idx.size();
    }
    log.train_loss.push_back(loss_sum / static_cast<double>(rows_seen));

    if (!valid_idx.empty()) {
      const double vloss = mse_loss(forward(mlp, x_valid), y_valid);
      log.valid_loss.push_back(vloss);
      if (vloss < best_valid - 1e-15) {
        best_valid = vloss;
        best = mlp;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        mlp = best;
        return log;
      }
    }
  }
  if (!valid_idx.empty() && best_valid < std::numeric_limits<double>::infinity()) {
    mlp = best;
  }
  return log;
}

std::uint64_t pretrain_decoder_seed(std::uint64_t seed, int stage) {
  return mix_seed(seed, 0xdec0ULL + static_cast<std::uint64_t>(stage));
}

std::uint64_t pretrain_stage_seed(std::uint64_t seed, int stage) {
  return mix_seed(seed, 0x5745ULL + static_cast<std::uint64_t>(stage));
}

Mlp layerwise_pretrain(Mlp mlp, const Matrix& data, const TrainConfig& cfg) {
  mlp.validate();
  if (cfg.pretrain_epochs == 0) return mlp;
  if (data.cols() != mlp.input_dim()) {
    throw DataError("layerwise_pretrain: data width mismatch");
  }

  const std::vector<int> widths = mlp.widths();
  const bool mirrored = widths_mirror(widths);
  const std::size_t n_stages =
      mirrored ? mlp.layers.size() / 2
               : (mlp.layers.size() > 1 ? mlp.layers.size() - 1 : 1);

  TrainConfig stage_cfg = cfg;
  stage_cfg.epochs = cfg.pretrain_epochs;

  Matrix codes = data;
  for (std::size_t stage = 0; stage < n_stages; ++stage) {
    const DenseLayer& enc = mlp.layers[stage];
    const std::size_t dec_index = mlp.layers.size() - 1 - stage;
    const Activation dec_act =
        mirrored ? mlp.layers[dec_index].act : Activation::Linear;

    Rng dec_rng(pretrain_decoder_seed(cfg.seed, static_cast<int>(stage)));
    Mlp stage_net;
    stage_net.layers.push_back(enc);
    stage_net.layers.push_back(make_dense(static_cast<int>(enc.out_dim()),
                                          static_cast<int>(enc.in_dim()),
                                          dec_act, dec_rng));
    stage_cfg.seed = pretrain_stage_seed(cfg.seed, static_cast<int>(stage));
    train_mse(stage_net, codes, codes, stage_cfg);

    mlp.layers[stage] = stage_net.layers[0];
    if (mirrored) mlp.layers[dec_index] = stage_net.layers[1];
    codes = apply_activation(
        ((codes * mlp.layers[stage].w.transpose()).rowwise() +
         mlp.layers[stage].b.transpose())
            .eval(),
        mlp.layers[stage].act);
  }
  return mlp;
}

double gradient_check(const std::function<double(const Vector&)>& loss_fn,
                      const Vector& params, const Vector& analytic_grad,
                      const GradCheckConfig& cfg) {
  if (params.size() != analytic_grad.size()) {
    throw DataError("gradient_check: param/gradient size mismatch");
  }
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(params.size()));
  std::iota(coords.begin(), coords.end(), 0);
  if (static_cast<int>(coords.size()) > cfg.max_coords) {
    Rng rng(mix_seed(cfg.seed, 0x6664ULL));
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(static_cast<std::size_t>(cfg.max_coords));
  }

  double worst = 0.0;
  Vector probe = params;
  for (const Eigen::Index c : coords) {
    const double saved = probe[c];
    probe[c] = saved + cfg.h;
    const double up = loss_fn(probe);
    probe[c] = saved - cfg.h;
    const double down = loss_fn(probe);
    probe[c] = saved;
    const double fd = (up - down) / (2.0 * cfg.h);
    const double an = analytic_grad[c];
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-2});
    worst = std::max(worst, std::abs(fd - an) / denom);
  }
  return worst;
}

Vector flatten_params(const Mlp& mlp) {
  Eigen::Index total = 0;
  for (const auto& layer : mlp.layers) {
    total += layer.w.size() + layer.b.size();
  }
  Vector flat(total);
  Eigen::Index at = 0;
  for (const auto& layer : mlp.layers) {
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
        flat[at++] = layer.w(r, c);
      }
    }
    flat.segment(at, layer.b.size()) = layer.b;
    at += layer.b.size();
  }
  return flat;
}

void unflatten_params(Mlp& mlp, const Vector& flat) {
  Eigen::Index at = 0;
  for (auto& layer : mlp.layers) {
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) {
        layer.w(r, c) = flat[at++];
      }
    }
    layer.b = flat.segment(at, layer.b.size());
    at += layer.b.size();
  }
  if (at != flat.size()) {
    throw DataError("unflatten_params: size mismatch");
  }
}

Vector flatten_grads(const Gradients& grads) {
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < grads.w.size(); ++i) {
    total += grads.w[i].size() + grads.b[i].size();
  }
  Vector flat(total);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < grads.w.size(); ++i) {
    for (Eigen::Index c = 0; c < grads.w[i].cols(); ++c) {
      for (Eigen::Index r = 0; r < grads.w[i].rows(); ++r) {
        flat[at++] = grads.w[i](r, c);
      }
    }
    flat.segment(at, grads.b[i].size()) = grads.b[i];
    at += grads.b[i].size();
  }
  return flat;
}

}  // namespace hmsyn::nn
