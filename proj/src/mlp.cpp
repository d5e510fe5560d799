// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/mlp.hpp"

#include <cmath>
#include <random>

#include "dgflow/errors.hpp"

namespace dgflow::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::ReLU:
      return "relu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Identity:
      return "identity";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + name + "'");
}

int Mlp::input_dim() const { return layers.empty() ? 0 : layers.front().in(); }

int Mlp::output_dim() const { return layers.empty() ? 0 : layers.back().out(); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void Mlp::validate() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.out() <= 0 || l.in() <= 0)
      throw ConfigError("layer " + std::to_string(i) + " has an empty weight");
    if (l.bias.size() != l.out())
      throw ConfigError("layer " + std::to_string(i) + " bias length " +
                        std::to_string(l.bias.size()) + " != " + std::to_string(l.out()));
    if (i > 0 && layers[i - 1].out() != l.in())
      throw ConfigError("layer " + std::to_string(i) + " expects " + std::to_string(l.in()) +
                        " inputs but previous layer emits " +
                        std::to_string(layers[i - 1].out()));
  }
  if (spectral_norm) {
    if (power_iter_state.size() != layers.size())
      throw ConfigError("spectral_norm set but power-iteration state is missing");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (power_iter_state[i].u.size() != layers[i].out() ||
          power_iter_state[i].v.size() != layers[i].in())
        throw ConfigError("power-iteration state of layer " + std::to_string(i) +
                          " has the wrong shape");
    }
  }
}

Mlp make_mlp(std::span<const int> dims, Activation hidden, Activation output,
             std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("an MLP needs at least input and output widths");
  std::mt19937_64 rng(seed);
  Mlp net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int in = dims[i];
    const int out = dims[i + 1];
    if (in <= 0 || out <= 0) throw ConfigError("layer widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer l;
    l.weight.resize(out, in);
    l.bias.resize(out);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = u(rng);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = u(rng);
    l.activation = (i + 2 == dims.size()) ? output : hidden;
    net.layers.push_back(std::move(l));
  }
  return net;
}

namespace {

Vector random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

void apply_activation(Activation a, const Matrix& pre, Matrix& post) {
  switch (a) {
    case Activation::ReLU:
      post = pre.cwiseMax(0.0);
      break;
    case Activation::Tanh:
      post = pre.array().tanh().matrix();
      break;
    case Activation::Identity:
      post = pre;
      break;
  }
}

// grad <- grad * act'(pre), elementwise.
void mask_by_derivative(Activation a, const Matrix& pre, const Matrix& post, Matrix& grad) {
  switch (a) {
    case Activation::ReLU:
      grad = (pre.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::Tanh:
      grad.array() *= 1.0 - post.array().square();
      break;
    case Activation::Identity:
      break;
  }
}

void check_input(const Mlp& net, const Matrix& batch) {
  if (net.layers.empty()) throw ConfigError("network has no layers");
  if (batch.cols() != net.input_dim())
    throw ConfigError("batch has " + std::to_string(batch.cols()) +
                      " columns but the network expects " + std::to_string(net.input_dim()));
}

void check_cache(const Mlp& net, const ForwardCache& cache, const Matrix& out_grad) {
  if (cache.empty() || cache.pre.size() != net.layers.size())
    throw UsageError("backward pass called without a matching forward cache");
  if (out_grad.rows() != cache.input.rows() || out_grad.cols() != net.output_dim())
    throw UsageError("output gradient shape does not match the forward outputs");
}

void check_scalar_output(const Mlp& net) {
  if (net.output_dim() != 1)
    throw UsageError("input gradient requires a scalar-output network, got output dim " +
                     std::to_string(net.output_dim()));
}

}  // namespace

void enable_spectral_norm(Mlp& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  net.power_iter_state.clear();
  for (const auto& l : net.layers)
    net.power_iter_state.push_back({random_unit(l.out(), rng), random_unit(l.in(), rng)});
  net.spectral_norm = true;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
  MlpGrads g;
  for (const auto& l : net.layers) {
    g.weight.push_back(Matrix::Zero(l.out(), l.in()));
    g.bias.push_back(Vector::Zero(l.out()));
  }
  return g;
}

void MlpGrads::add_scaled(const MlpGrads& other, double scale) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += scale * other.weight[i];
    bias[i] += scale * other.bias[i];
  }
}

double MlpGrads::squared_norm() const {
  double s = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i)
    s += weight[i].squaredNorm() + bias[i].squaredNorm();
  return s;
}

ForwardResult mlp_forward(const Mlp& net, const Matrix& batch) {
  check_input(net, batch);
  ForwardResult r;
  r.cache.input = batch;
  r.cache.pre.resize(net.layers.size());
  r.cache.post.resize(net.layers.size());
  const Matrix* x = &r.cache.input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    Matrix& z = r.cache.pre[i];
    z.noalias() = *x * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    apply_activation(l.activation, z, r.cache.post[i]);
    x = &r.cache.post[i];
  }
  r.outputs = r.cache.post.back();
  return r;
}

Matrix predict(const Mlp& net, const Matrix& batch) {
  check_input(net, batch);
  Matrix x = batch;
  Matrix z;
  for (const auto& l : net.layers) {
    z.noalias() = x * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    apply_activation(l.activation, z, x);
  }
  return x;
}

BackwardResult mlp_backward(const Mlp& net, const ForwardCache& cache, const Matrix& out_grad) {
  check_cache(net, cache, out_grad);
  BackwardResult r;
  r.params.weight.resize(net.layers.size());
  r.params.bias.resize(net.layers.size());
  Matrix g = out_grad;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto& l = net.layers[k];
    mask_by_derivative(l.activation, cache.pre[k], cache.post[k], g);
    const Matrix& x = k == 0 ? cache.input : cache.post[k - 1];
    r.params.weight[k].noalias() = g.transpose() * x;
    r.params.bias[k] = g.colwise().sum().transpose();
    Matrix next;
    next.noalias() = g * l.weight;
    g = std::move(next);
  }
  r.input = std::move(g);
  return r;
}

Matrix mlp_backward_input(const Mlp& net, const ForwardCache& cache, const Matrix& out_grad) {
  check_cache(net, cache, out_grad);
  Matrix g = out_grad;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto& l = net.layers[k];
    mask_by_derivative(l.activation, cache.pre[k], cache.post[k], g);
    Matrix next;
    next.noalias() = g * l.weight;
    g = std::move(next);
  }
  return g;
}

Matrix input_gradient(const Mlp& net, const Matrix& batch) {
  check_scalar_output(net);
  const auto fwd = mlp_forward(net, batch);
  return mlp_backward_input(net, fwd.cache, Matrix::Ones(batch.rows(), 1));
}

PenaltyGrad gp_param_gradient(const Mlp& net, const Matrix& batch) {
  check_scalar_output(net);
  for (std::size_t k = 0; k < net.layers.size(); ++k)
    if (net.layers[k].activation == Activation::Tanh)
      throw UnsupportedError("gradient penalty needs piecewise-linear activations; layer " +
                             std::to_string(k) + " is tanh (use spectral normalization)");

  const auto fwd = mlp_forward(net, batch);
  const std::size_t depth = net.layers.size();
  const Eigen::Index n = batch.rows();

  // Input-gradient pass, keeping the masked gradient at every pre-activation.
  std::vector<Matrix> dpre(depth);
  Matrix g = Matrix::Ones(n, 1);
  for (std::size_t k = depth; k-- > 0;) {
    const auto& l = net.layers[k];
    mask_by_derivative(l.activation, fwd.cache.pre[k], fwd.cache.post[k], g);
    dpre[k] = g;
    Matrix next;
    next.noalias() = g * l.weight;
    g = std::move(next);
  }

  PenaltyGrad out;
  out.params = MlpGrads::zeros_like(net);
  if (n == 0) return out;

  // Seed: d/dg_i of mean_i (||g_i|| - 1)^2.
  Matrix seed(n, g.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = g.row(i).norm();
    const double excess = norm - 1.0;
    total += excess * excess;
    if (norm > 0.0)
      seed.row(i) = (2.0 * excess / (static_cast<double>(n) * norm)) * g.row(i);
    else
      seed.row(i).setZero();
  }
  out.penalty = total / static_cast<double>(n);

  // Reverse through g_{k-1} = dpre_k W_k with dpre_k = g_k * mask_k.
  Matrix bar = std::move(seed);
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& l = net.layers[k];
    out.params.weight[k].noalias() = dpre[k].transpose() * bar;
    if (k + 1 == depth) break;
    Matrix next;
    next.noalias() = bar * l.weight.transpose();
    mask_by_derivative(l.activation, fwd.cache.pre[k], fwd.cache.post[k], next);
    bar = std::move(next);
  }
  return out;
}

std::vector<double> spectral_step(Mlp& net, int power_iters) {
  if (!net.spectral_norm || net.power_iter_state.size() != net.layers.size())
    throw UsageError("spectral_step requires initialized power-iteration state");
  std::vector<double> sigmas(net.layers.size(), 0.0);
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto& w = net.layers[k].weight;
    auto& st = net.power_iter_state[k];
    bool degenerate = false;
    for (int it = 0; it < power_iters; ++it) {
      Vector v = w.transpose() * st.u;
      const double vn = v.norm();
      if (vn == 0.0) {
        degenerate = true;
        break;
      }
      st.v = v / vn;
      Vector u = w * st.v;
      const double un = u.norm();
      if (un == 0.0) {
        degenerate = true;
        break;
      }
      st.u = u / un;
    }
    if (degenerate) continue;
    const double sigma = st.u.dot(w * st.v);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) continue;
    sigmas[k] = sigma;
    w /= sigma;
  }
  return sigmas;
}

}  // namespace dgflow::nn
