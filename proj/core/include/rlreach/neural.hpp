#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rlreach::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;
  bool operator==(const LayerShape&) const = default;
};

enum class Activation { Identity, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Layer shapes for in -> hidden... -> out.
std::vector<LayerShape> chain_shapes(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out);

// Feed-forward net: y = x W + b per layer, tanh on hidden layers and the
// configured activation on the output. All parameters live in one flat buffer
// laid out as [W0 (in x out, row-major), b0, W1, b1, ...].
class Mlp {
 public:
  // Records post-activation outputs of every layer for a backward pass.
  struct Tape {
    std::vector<RowMatrix> activations;  // [0] is the input batch
  };

  Mlp() = default;
  explicit Mlp(std::vector<LayerShape> shapes, Activation output = Activation::Identity);

  // Glorot-uniform weights in +-sqrt(6 / (in + out)), zero biases.
  static Mlp glorot(std::vector<LayerShape> shapes, std::mt19937_64& rng,
                    Activation output = Activation::Identity);

  const std::vector<LayerShape>& shapes() const { return shapes_; }
  std::size_t n_layers() const { return shapes_.size(); }
  std::size_t in_dim() const { return shapes_.front().in; }
  std::size_t out_dim() const { return shapes_.back().out; }
  Activation output_activation() const { return output_; }

  std::size_t n_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  Eigen::Map<RowMatrix> weight(std::size_t layer);
  Eigen::Map<const RowMatrix> weight(std::size_t layer) const;
  Eigen::Map<Vector> bias(std::size_t layer);
  Eigen::Map<const Vector> bias(std::size_t layer) const;

  std::vector<double> forward(std::span<const double> input) const;
  RowMatrix forward_batch(const RowMatrix& inputs, Tape* tape = nullptr) const;

  // Adds d(sum(output .* output_grad))/dparams into `param_grad` and returns
  // the gradient with respect to the input batch.
  RowMatrix backward_batch(const Tape& tape, const RowMatrix& output_grad,
                           std::span<double> param_grad) const;

 private:
  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;  // start of W_k in params_
  std::vector<double> params_;
  Activation output_ = Activation::Identity;
};

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);

struct MlpGradients {
  std::vector<double> params;  // same layout as Mlp::params()
  std::vector<double> input;
};

MlpGradients mlp_backward(const Mlp& net, std::span<const double> input,
                          std::span<const double> output_grad);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n_params, double learning_rate)
      : first_moment(n_params, 0.0), second_moment(n_params, 0.0), lr(learning_rate) {}
};

// Bias-corrected Adam. Throws NumericError (leaving params untouched) on a
// non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// Scales grads so their global L2 norm is at most max_norm; returns the norm before clipping.
double clip_grad_norm(std::span<double> grads, double max_norm);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action);

// Differential entropy of a diagonal Gaussian: sum(log_std + 0.5 ln(2 pi e)).
double gaussian_entropy(std::span<const double> log_std);

struct GaussianSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

GaussianSample gaussian_sample(std::span<const double> mean, std::span<const double> log_std,
                               std::mt19937_64& rng);

}  // namespace rlreach::nn
