// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "dgflow/errors.hpp"
#include "dgflow/mlp.hpp"

namespace dgflow::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments mirror the parameter shapes.
struct AdamState {
  AdamConfig config;
  MlpGrads m;
  MlpGrads v;
  std::int64_t step = 0;

  static AdamState for_net(const Mlp& net, const AdamConfig& cfg);
};

/// One Adam update of every weight and bias of `net`. Throws NumericError
/// naming the parameter (e.g. "L2.w") if any gradient entry is non-finite;
/// in that case nothing is modified.
void adam_step(AdamState& state, Mlp& net, const MlpGrads& grads);

/// Elementwise Adam update of a dense parameter block. `step` is the 1-based
/// step count after incrementing.
template <typename Param, typename Grad>
void adam_update(Param& param, const Grad& grad, Param& m, Param& v, std::int64_t step,
                 const AdamConfig& cfg) {
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  // beta = 0 gives c = 1 from step 1 on.
  param.array() -= cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
}

/// SGD with heavy-ball momentum: vel = mu * vel + g; p -= lr * vel.
struct SgdState {
  double lr = 1e-4;
  double momentum = 0.9;
  MlpGrads velocity;

  static SgdState for_net(const Mlp& net, double lr, double momentum);
};

void sgd_step(SgdState& state, Mlp& net, const MlpGrads& grads);

/// Throws NumericError naming the first non-finite gradient block.
void check_finite(const MlpGrads& grads);

}  // namespace dgflow::nn
