// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgflow/fdivergence.hpp"
#include "dgflow/models.hpp"
#include "dgflow/optim.hpp"

namespace dgflow::refine {

using nn::Matrix;

enum class Space { Data, Latent };

std::string to_string(Space s);
Space parse_space(const std::string& name);

/// Particles advanced by a refinement method. Each particle owns a noise
/// stream keyed by its id, so results do not depend on how particles are
/// grouped or split across workers.
struct ParticleBatch {
  Matrix positions;
  Space space = Space::Latent;
  std::vector<std::uint64_t> ids;

  /// ids 0..n-1
  static ParticleBatch with_sequential_ids(Matrix positions, Space space);
  void validate() const;
};

/// Discriminators whose logits add up: exp(-sum_i d_i(x)) estimates the
/// ratio of generated to target density.
struct RatioStack {
  std::vector<models::DiscriminatorModel> discs;

  void validate() const;
};

struct FlowConfig {
  double eta = 0.01;
  std::int64_t steps = 100;
  double gamma = 0.01;
  Space space = Space::Latent;
  FDivergence divergence{DivergenceKind::KL};
  std::uint64_t seed = 0;
  /// Snapshot cadence in steps; 0 disables snapshots.
  std::int64_t snapshot_every = 5;
  int threads = 1;

  void validate() const;
};

struct DdlsConfig {
  std::int64_t steps = 50;
  double step_size = 0.01;
  double noise_scale = 0.1;
  std::uint64_t seed = 0;
  std::int64_t snapshot_every = 5;
  int threads = 1;

  void validate() const;
};

struct DotConfig {
  std::int64_t steps = 100;
  nn::AdamConfig adam{0.01, 0.0, 0.9, 1e-8};
  double lambda_prox = 0.5;
  std::int64_t snapshot_every = 5;
  int threads = 1;

  void validate() const;
};

struct Snapshot {
  std::int64_t step = 0;
  Matrix samples;  // data space
};

struct FlowResult {
  ParticleBatch particles;  // final positions, same space as the input
  Matrix samples;           // final samples in data space
  std::vector<Snapshot> snapshots;
};

struct LogitGrad {
  Matrix logit;  // n x 1, summed over the stack
  Matrix grad;   // n x dim, gradient of the summed logit
};

/// Summed logit and its gradient w.r.t. data-space points.
LogitGrad logit_grad_data(const RatioStack& stack, const Matrix& x);

/// Summed logit of g(z) and its gradient w.r.t. the latents.
LogitGrad logit_grad_latent(const models::GeneratorModel& gen, const RatioStack& stack,
                            const Matrix& z);

/// Flow velocity -grad f'(exp(-d)) = f''(r) r grad d with r = exp(-d), row-wise.
Matrix drift(const FDivergence& div, const Matrix& logit, const Matrix& grad_logit);

/// DGflow drift in latent space, -grad_z f'(exp(-sum d_i(g(z)))).
Matrix latent_drift(const models::GeneratorModel& gen, const RatioStack& stack, const Matrix& z,
                    const FDivergence& div);

/// Score of the DDLS latent energy, grad_z [log N(z; 0, I) + d(g(z))] = -z + grad_z d(g(z)).
Matrix ddls_drift(const models::GeneratorModel& gen, const RatioStack& stack, const Matrix& z);

/// DOT objective -d(g(u)) + ||u - u0||^2 / (2 lambda), per row.
Matrix dot_objective(const models::GeneratorModel& gen, const RatioStack& stack, const Matrix& u,
                     const Matrix& u0, double lambda_prox);
/// Gradient of dot_objective w.r.t. u.
Matrix dot_gradient(const models::GeneratorModel& gen, const RatioStack& stack, const Matrix& u,
                    const Matrix& u0, double lambda_prox);

/// Euler-Maruyama on data-space particles with a frozen (stale) ratio:
/// x <- x - eta grad f'(exp(-d(x))) + sqrt(2 gamma eta) xi.
/// Throws NumericError with step and particle id if a position goes non-finite.
FlowResult refine_data_space(const RatioStack& stack, const ParticleBatch& batch,
                             const FlowConfig& cfg);

/// The same update on latents with d replaced by d(g(z)); returns g(z_N).
FlowResult refine_latent(const models::GeneratorModel& gen, const RatioStack& stack,
                         const ParticleBatch& latents, const FlowConfig& cfg);

/// Langevin dynamics on p_Z(z) exp(d(g(z))):
/// z <- z + (eps/2) grad_z[-||z||^2/2 + d(g(z))] + noise_scale sqrt(eps) xi.
FlowResult ddls_refine(const models::GeneratorModel& gen, const RatioStack& stack,
                       const ParticleBatch& latents, const DdlsConfig& cfg);

/// Adam minimization of the DOT objective from u0 = the input latents.
FlowResult dot_refine(const models::GeneratorModel& gen, const RatioStack& stack,
                      const ParticleBatch& latents, const DotConfig& cfg);

}  // namespace dgflow::refine
