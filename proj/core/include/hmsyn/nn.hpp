#pragma once

#include "hmsyn/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hmsyn::nn {

enum class Activation { Tanh, Relu, Linear };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Matrix w;  // out x in
  Vector b;
  Activation act = Activation::Linear;

  Eigen::Index in_dim() const { return w.cols(); }
  Eigen::Index out_dim() const { return w.rows(); }
};

struct Mlp {
  std::vector<DenseLayer> layers;

  Eigen::Index input_dim() const { return layers.front().in_dim(); }
  Eigen::Index output_dim() const { return layers.back().out_dim(); }
  std::vector<int> widths() const;
  void validate() const;
};

/// Uniform init in +/- sqrt(6 / (fan_in + fan_out)), zero biases.
DenseLayer make_dense(int in, int out, Activation act, Rng& rng);
Mlp make_mlp(const std::vector<int>& widths,
             const std::vector<Activation>& acts, Rng& rng);

struct ForwardCache {
  std::vector<Matrix> inputs;   // input to each layer
  std::vector<Matrix> preacts;  // W x + b per layer
  Matrix output;
};

Matrix forward(const Mlp& mlp, const Matrix& batch);
ForwardCache forward_cached(const Mlp& mlp, const Matrix& batch);

struct Gradients {
  std::vector<Matrix> w;
  std::vector<Vector> b;
};

/// Backpropagates dL/d(output); returns parameter gradients and, when
/// `dinput` is non-null, dL/d(batch input).
Gradients backward_from_output(const Mlp& mlp, const ForwardCache& cache,
                               const Matrix& dout, Matrix* dinput = nullptr);

/// Mean over the batch of the squared error summed over output dims.
double mse_loss(const Matrix& output, const Matrix& targets);

struct MseBackward {
  double loss = 0.0;
  Gradients grads;
};
MseBackward backward_mse(const Mlp& mlp, const Matrix& batch,
                         const Matrix& targets);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard Adam with bias correction; moment buffers mirror the layer
/// parameters.
class AdamState {
 public:
  explicit AdamState(const Mlp& mlp, AdamConfig cfg = {});
  void step(Mlp& mlp, const Gradients& grads);
  long steps_taken() const { return step_count_; }

 private:
  AdamConfig cfg_;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
  long step_count_ = 0;
};

struct TrainConfig {
  int batch_size = 512;
  int epochs = 30;
  int pretrain_epochs = 5;
  std::uint64_t seed = 0;
  int patience = 10;
  double validation_fraction = 0.1;
  AdamConfig adam;
};

struct TrainLog {
  std::vector<double> train_loss;  // per-epoch mean
  std::vector<double> valid_loss;  // empty when no validation split
};

/// Minibatch Adam on the MSE objective with a seeded shuffle, a held-out
/// validation fraction, and early stopping (best parameters restored).
TrainLog train_mse(Mlp& mlp, const Matrix& inputs, const Matrix& targets,
                   const TrainConfig& cfg);

/// Seeds used for the throwaway decoders and the per-stage training streams,
/// exposed so equivalence can be tested from outside.
std::uint64_t pretrain_decoder_seed(std::uint64_t seed, int stage);
std::uint64_t pretrain_stage_seed(std::uint64_t seed, int stage);

/// Greedy layer-wise pretraining. Each stage trains one hidden layer as a
/// one-hidden-layer autoencoder of its input codes. For mirror-shaped stacks
/// (widths palindromic) the stage decoder is kept as the matching decoder
/// layer; otherwise stage decoders are discarded and the final layer is left
/// for fine-tuning. cfg.pretrain_epochs == 0 returns the input unchanged.
Mlp layerwise_pretrain(Mlp mlp, const Matrix& data, const TrainConfig& cfg);

struct GradCheckConfig {
  double h = 1e-5;
  int max_coords = 500;
  std::uint64_t seed = 0;
};

/// Central finite differences on a random subsample of coordinates; returns
/// the worst relative error against `analytic_grad`.
double gradient_check(const std::function<double(const Vector&)>& loss_fn,
                      const Vector& params, const Vector& analytic_grad,
                      const GradCheckConfig& cfg = {});

// Flat parameter views used by the gradient checker.
Vector flatten_params(const Mlp& mlp);
void unflatten_params(Mlp& mlp, const Vector& flat);
Vector flatten_grads(const Gradients& grads);

}  // namespace hmsyn::nn
