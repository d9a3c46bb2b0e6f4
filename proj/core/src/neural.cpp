#include "rlreach/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rlreach/errors.hpp"

namespace rlreach::nn {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

bool is_output_layer(const Mlp& net, std::size_t k) { return k + 1 == net.n_layers(); }

}  // namespace

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "identity"; }

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  throw ValidationError("unknown activation '" + name + "'");
}

std::vector<LayerShape> chain_shapes(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out) {
  std::vector<LayerShape> shapes;
  std::size_t prev = in;
  for (auto h : hidden) {
    shapes.push_back({prev, h});
    prev = h;
  }
  shapes.push_back({prev, out});
  return shapes;
}

Mlp::Mlp(std::vector<LayerShape> shapes, Activation output)
    : shapes_(std::move(shapes)), output_(output) {
  if (shapes_.empty()) throw ContractViolation("Mlp: at least one layer required");
  std::size_t total = 0;
  for (std::size_t k = 0; k < shapes_.size(); ++k) {
    const auto& s = shapes_[k];
    if (s.in == 0 || s.out == 0) throw ContractViolation("Mlp: zero-sized layer");
    if (k > 0 && shapes_[k - 1].out != s.in) {
      throw ContractViolation("Mlp: layer " + std::to_string(k) + " does not chain");
    }
    offsets_.push_back(total);
    total += s.in * s.out + s.out;
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::glorot(std::vector<LayerShape> shapes, std::mt19937_64& rng, Activation output) {
  Mlp net(std::move(shapes), output);
  for (std::size_t k = 0; k < net.n_layers(); ++k) {
    const auto& s = net.shapes_[k];
    const double limit = std::sqrt(6.0 / static_cast<double>(s.in + s.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = net.weight(k);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  }
  return net;
}

Eigen::Map<RowMatrix> Mlp::weight(std::size_t k) {
  const auto& s = shapes_.at(k);
  return {params_.data() + offsets_[k], static_cast<Eigen::Index>(s.in),
          static_cast<Eigen::Index>(s.out)};
}

Eigen::Map<const RowMatrix> Mlp::weight(std::size_t k) const {
  const auto& s = shapes_.at(k);
  return {params_.data() + offsets_[k], static_cast<Eigen::Index>(s.in),
          static_cast<Eigen::Index>(s.out)};
}

Eigen::Map<Vector> Mlp::bias(std::size_t k) {
  const auto& s = shapes_.at(k);
  return {params_.data() + offsets_[k] + s.in * s.out, static_cast<Eigen::Index>(s.out)};
}

Eigen::Map<const Vector> Mlp::bias(std::size_t k) const {
  const auto& s = shapes_.at(k);
  return {params_.data() + offsets_[k] + s.in * s.out, static_cast<Eigen::Index>(s.out)};
}

RowMatrix Mlp::forward_batch(const RowMatrix& inputs, Tape* tape) const {
  if (static_cast<std::size_t>(inputs.cols()) != in_dim()) {
    throw ContractViolation("Mlp::forward: expected input width " + std::to_string(in_dim()) +
                            ", got " + std::to_string(inputs.cols()));
  }
  if (tape) {
    tape->activations.clear();
    tape->activations.push_back(inputs);
  }
  RowMatrix x = inputs;
  for (std::size_t k = 0; k < n_layers(); ++k) {
    RowMatrix z = x * weight(k);
    z.rowwise() += bias(k).transpose();
    if (!is_output_layer(*this, k) || output_ == Activation::Tanh) z = z.array().tanh();
    x = std::move(z);
    if (tape) tape->activations.push_back(x);
  }
  return x;
}

RowMatrix Mlp::backward_batch(const Tape& tape, const RowMatrix& output_grad,
                              std::span<double> param_grad) const {
  if (tape.activations.size() != n_layers() + 1) {
    throw ContractViolation("Mlp::backward: tape does not match network depth");
  }
  if (param_grad.size() != n_params()) {
    throw ContractViolation("Mlp::backward: gradient buffer has wrong size");
  }
  const auto& last = tape.activations.back();
  if (output_grad.rows() != last.rows() || output_grad.cols() != last.cols()) {
    throw ContractViolation("Mlp::backward: output gradient shape mismatch");
  }

  RowMatrix delta = output_grad;
  for (std::size_t k = n_layers(); k-- > 0;) {
    const RowMatrix& out = tape.activations[k + 1];
    const RowMatrix& in = tape.activations[k];
    if (!is_output_layer(*this, k) || output_ == Activation::Tanh) {
      delta = (delta.array() * (1.0 - out.array().square())).matrix();
    }
    const auto& s = shapes_[k];
    Eigen::Map<RowMatrix> gw(param_grad.data() + offsets_[k], static_cast<Eigen::Index>(s.in),
                             static_cast<Eigen::Index>(s.out));
    Eigen::Map<Vector> gb(param_grad.data() + offsets_[k] + s.in * s.out,
                          static_cast<Eigen::Index>(s.out));
    gw.noalias() += in.transpose() * delta;
    gb += delta.colwise().sum().transpose();
    delta = delta * weight(k).transpose();
  }
  return delta;
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  if (input.size() != in_dim()) {
    throw ContractViolation("Mlp::forward: expected input length " + std::to_string(in_dim()) +
                            ", got " + std::to_string(input.size()));
  }
  RowMatrix x = Eigen::Map<const RowMatrix>(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  RowMatrix y = forward_batch(x);
  return {y.data(), y.data() + y.size()};
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
  return net.forward(input);
}

MlpGradients mlp_backward(const Mlp& net, std::span<const double> input,
                          std::span<const double> output_grad) {
  if (input.size() != net.in_dim() || output_grad.size() != net.out_dim()) {
    throw ContractViolation("mlp_backward: input/output gradient length mismatch");
  }
  Mlp::Tape tape;
  RowMatrix x = Eigen::Map<const RowMatrix>(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  net.forward_batch(x, &tape);
  RowMatrix g = Eigen::Map<const RowMatrix>(output_grad.data(), 1,
                                            static_cast<Eigen::Index>(output_grad.size()));
  MlpGradients grads;
  grads.params.assign(net.n_params(), 0.0);
  RowMatrix dx = net.backward_batch(tape, g, grads.params);
  grads.input.assign(dx.data(), dx.data() + dx.size());
  return grads;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ContractViolation("adam_step: parameter/gradient/moment sizes differ");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("clip_grad_norm: non-finite gradient norm");
  if (norm > max_norm) {
    const double scale = max_norm / (norm + 1e-6);
    for (double& g : grads) g *= scale;
  }
  return norm;
}

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action) {
  if (mean.size() != log_std.size() || mean.size() != action.size()) {
    throw ContractViolation("gaussian_log_prob: length mismatch");
  }
  double lp = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) / std::exp(log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  const double per_dim = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  double h = 0.0;
  for (double ls : log_std) h += ls + per_dim;
  return h;
}

GaussianSample gaussian_sample(std::span<const double> mean, std::span<const double> log_std,
                               std::mt19937_64& rng) {
  if (mean.size() != log_std.size()) throw ContractViolation("gaussian_sample: length mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  GaussianSample s;
  s.action.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    s.action[i] = mean[i] + std::exp(log_std[i]) * normal(rng);
  }
  s.log_prob = gaussian_log_prob(mean, log_std, s.action);
  return s;
}

}  // namespace rlreach::nn
