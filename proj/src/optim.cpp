// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/optim.hpp"

namespace dgflow::nn {

AdamState AdamState::for_net(const Mlp& net, const AdamConfig& cfg) {
  AdamState s;
  s.config = cfg;
  s.m = MlpGrads::zeros_like(net);
  s.v = MlpGrads::zeros_like(net);
  return s;
}

void check_finite(const MlpGrads& grads) {
  for (std::size_t k = 0; k < grads.weight.size(); ++k) {
    if (!grads.weight[k].allFinite())
      throw NumericError("non-finite gradient in parameter L" + std::to_string(k) + ".w");
    if (!grads.bias[k].allFinite())
      throw NumericError("non-finite gradient in parameter L" + std::to_string(k) + ".b");
  }
}

void adam_step(AdamState& state, Mlp& net, const MlpGrads& grads) {
  if (grads.weight.size() != net.layers.size() || state.m.weight.size() != net.layers.size())
    throw ConfigError("Adam state / gradient layout does not match the network");
  check_finite(grads);
  ++state.step;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto& l = net.layers[k];
    adam_update(l.weight, grads.weight[k], state.m.weight[k], state.v.weight[k], state.step,
                state.config);
    adam_update(l.bias, grads.bias[k], state.m.bias[k], state.v.bias[k], state.step,
                state.config);
  }
}

SgdState SgdState::for_net(const Mlp& net, double lr, double momentum) {
  SgdState s;
  s.lr = lr;
  s.momentum = momentum;
  s.velocity = MlpGrads::zeros_like(net);
  return s;
}

void sgd_step(SgdState& state, Mlp& net, const MlpGrads& grads) {
  if (grads.weight.size() != net.layers.size())
    throw ConfigError("SGD gradient layout does not match the network");
  check_finite(grads);
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    state.velocity.weight[k] = state.momentum * state.velocity.weight[k] + grads.weight[k];
    state.velocity.bias[k] = state.momentum * state.velocity.bias[k] + grads.bias[k];
    net.layers[k].weight -= state.lr * state.velocity.weight[k];
    net.layers[k].bias -= state.lr * state.velocity.bias[k];
  }
}

}  // namespace dgflow::nn
