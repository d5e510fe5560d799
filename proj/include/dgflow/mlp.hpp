// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dgflow::nn {

/// Row-major dense matrix. Batches are stored one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { ReLU, Tanh, Identity };

std::string to_string(Activation a);
/// Parses "relu" / "tanh" / "identity"; throws ConfigError otherwise.
Activation parse_activation(const std::string& name);

/// Fully connected layer y = act(x W^T + b). `weight` is out x in.
struct Layer {
  Matrix weight;
  Vector bias;
  Activation activation = Activation::Identity;

  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }
};

/// Left/right singular-vector estimates for one weight matrix.
struct PowerIterState {
  Vector u;  // length out
  Vector v;  // length in
};

/// A plain multilayer perceptron. Value type; copying copies all weights.
struct Mlp {
  std::vector<Layer> layers;
  bool spectral_norm = false;
  std::vector<PowerIterState> power_iter_state;

  int input_dim() const;
  int output_dim() const;
  std::size_t parameter_count() const;

  /// Throws ConfigError if consecutive layer dimensions do not compose, a
  /// bias has the wrong length, or spectral_norm is set without state for
  /// every layer.
  void validate() const;
};

/// Builds an MLP with layer widths `dims` (dims.front() is the input size),
/// `hidden` activation on all but the last layer and `output` on the last.
/// Weights and biases are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Mlp make_mlp(std::span<const int> dims, Activation hidden, Activation output,
             std::uint64_t seed);

/// Allocates unit-norm random power-iteration vectors and sets spectral_norm.
void enable_spectral_norm(Mlp& net, std::uint64_t seed);

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // per layer, before activation
  std::vector<Matrix> post;  // per layer, after activation

  bool empty() const { return pre.empty(); }
};

struct ForwardResult {
  Matrix outputs;
  ForwardCache cache;
};

/// Same shapes as the network's parameters.
struct MlpGrads {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  static MlpGrads zeros_like(const Mlp& net);
  /// this += scale * other
  void add_scaled(const MlpGrads& other, double scale);
  double squared_norm() const;
};

struct BackwardResult {
  MlpGrads params;
  Matrix input;
};

ForwardResult mlp_forward(const Mlp& net, const Matrix& batch);

/// Forward pass that discards intermediate activations.
Matrix predict(const Mlp& net, const Matrix& batch);

/// Reverse pass for a loss whose gradient w.r.t. the outputs is `out_grad`.
BackwardResult mlp_backward(const Mlp& net, const ForwardCache& cache,
                            const Matrix& out_grad);

/// As mlp_backward, but only propagates to the inputs (no parameter grads).
Matrix mlp_backward_input(const Mlp& net, const ForwardCache& cache,
                          const Matrix& out_grad);

/// Row i holds the gradient of the scalar output w.r.t. input row i.
Matrix input_gradient(const Mlp& net, const Matrix& batch);

struct PenaltyGrad {
  double penalty = 0.0;  // mean over rows of (||grad_x d(x_i)|| - 1)^2
  MlpGrads params;
};

/// Exact parameter gradient of the mean gradient penalty
/// mean_i (||grad_x d(x_i)||_2 - 1)^2, obtained by reverse-differentiating the
/// input-gradient map with activation masks held fixed. Only valid for ReLU
/// and Identity layers; Tanh throws UnsupportedError.
PenaltyGrad gp_param_gradient(const Mlp& net, const Matrix& batch);

/// Runs `power_iters` power iterations per layer from the stored state, then
/// divides each weight by its estimated top singular value. Layers whose
/// weight is identically zero are left untouched. Returns the per-layer
/// estimates (0 for skipped layers).
std::vector<double> spectral_step(Mlp& net, int power_iters);

}  // namespace dgflow::nn
