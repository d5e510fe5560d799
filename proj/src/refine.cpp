// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/refine.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <span>

#include "dgflow/errors.hpp"
#include "dgflow/parallel.hpp"
#include "dgflow/random.hpp"

namespace dgflow::refine {

std::string to_string(Space s) { return s == Space::Data ? "data" : "latent"; }

Space parse_space(const std::string& name) {
  if (name == "data") return Space::Data;
  if (name == "latent") return Space::Latent;
  throw ConfigError("unknown refinement space '" + name + "' (expected data or latent)");
}

ParticleBatch ParticleBatch::with_sequential_ids(Matrix positions, Space space) {
  ParticleBatch b;
  b.ids.resize(static_cast<std::size_t>(positions.rows()));
  for (std::size_t i = 0; i < b.ids.size(); ++i) b.ids[i] = i;
  b.positions = std::move(positions);
  b.space = space;
  return b;
}

void ParticleBatch::validate() const {
  if (static_cast<Eigen::Index>(ids.size()) != positions.rows())
    throw ConfigError("particle batch has " + std::to_string(positions.rows()) + " rows but " +
                      std::to_string(ids.size()) + " stream ids");
  if (positions.cols() != 2) throw ConfigError("particles must be 2-dimensional");
  if (!positions.allFinite()) throw NumericError("initial particle positions are not finite", 0);
}

void RatioStack::validate() const {
  if (discs.empty()) throw ConfigError("ratio stack is empty");
  for (const auto& d : discs)
    if (d.net.input_dim() != 2 || d.net.output_dim() != 1)
      throw ConfigError("ratio stack members must map R^2 -> R");
}

void FlowConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("step size eta must be positive");
  if (steps < 0) throw ConfigError("step count must be non-negative");
  if (!(gamma >= 0.0)) throw ConfigError("noise factor gamma must be non-negative");
  if (snapshot_every < 0) throw ConfigError("snapshot cadence must be non-negative");
}

void DdlsConfig::validate() const {
  if (steps < 0) throw ConfigError("DDLS step count must be non-negative");
  if (!(step_size > 0.0) || !(noise_scale >= 0.0))
    throw ConfigError("DDLS step size must be positive and noise scale non-negative");
}

void DotConfig::validate() const {
  if (steps < 0) throw ConfigError("DOT step count must be non-negative");
  if (!(lambda_prox > 0.0)) throw ConfigError("DOT lambda must be positive");
  if (!(adam.lr > 0.0)) throw ConfigError("DOT learning rate must be positive");
}

// ---------------------------------------------------------------------------

LogitGrad logit_grad_data(const RatioStack& stack, const Matrix& x) {
  LogitGrad out;
  out.logit = Matrix::Zero(x.rows(), 1);
  out.grad = Matrix::Zero(x.rows(), x.cols());
  for (const auto& d : stack.discs) {
    const auto fwd = nn::mlp_forward(d.net, x);
    out.logit += fwd.outputs;
    out.grad += nn::mlp_backward_input(d.net, fwd.cache, Matrix::Ones(x.rows(), 1));
  }
  return out;
}

LogitGrad logit_grad_latent(const models::GeneratorModel& gen, const RatioStack& stack,
                            const Matrix& z) {
  const auto gfwd = nn::mlp_forward(gen.net, z);
  auto lg = logit_grad_data(stack, gfwd.outputs);
  lg.grad = nn::mlp_backward_input(gen.net, gfwd.cache, lg.grad);
  return lg;
}

Matrix drift(const FDivergence& div, const Matrix& logit, const Matrix& grad_logit) {
  if (logit.rows() != grad_logit.rows() || logit.cols() != 1)
    throw ConfigError("drift: logit must be n x 1 and match the gradient rows");
  Matrix out = grad_logit;
  if (div.kind() == DivergenceKind::KL) return out;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= div.drift_scale(logit(i, 0));
  return out;
}

Matrix latent_drift(const models::GeneratorModel& gen, const RatioStack& stack, const Matrix& z,
                    const FDivergence& div) {
  const auto lg = logit_grad_latent(gen, stack, z);
  return drift(div, lg.logit, lg.grad);
}

Matrix ddls_drift(const models::GeneratorModel& gen, const RatioStack& stack, const Matrix& z) {
  const auto lg = logit_grad_latent(gen, stack, z);
  return lg.grad - z;
}

Matrix dot_objective(const models::GeneratorModel& gen, const RatioStack& stack, const Matrix& u,
                     const Matrix& u0, double lambda_prox) {
  const auto x = nn::predict(gen.net, u);
  Matrix total = Matrix::Zero(u.rows(), 1);
  for (const auto& d : stack.discs) total += nn::predict(d.net, x);
  return -total + (u - u0).rowwise().squaredNorm() / (2.0 * lambda_prox);
}

Matrix dot_gradient(const models::GeneratorModel& gen, const RatioStack& stack, const Matrix& u,
                    const Matrix& u0, double lambda_prox) {
  const auto lg = logit_grad_latent(gen, stack, u);
  return -lg.grad + (u - u0) / lambda_prox;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kChunk = 64;

using Stepper = std::function<void(std::int64_t step)>;
// Builds the per-chunk update closure over the chunk's positions and ids.
using StepperFactory =
    std::function<Stepper(Matrix& positions, std::span<const std::uint64_t> ids)>;
using ToSamples = std::function<Matrix(const Matrix&)>;

void check_rows(const Matrix& pos, std::span<const std::uint64_t> ids, std::int64_t step) {
  for (Eigen::Index i = 0; i < pos.rows(); ++i) {
    if (!pos.row(i).allFinite()) {
      const auto id = ids[static_cast<std::size_t>(i)];
      throw NumericError("particle " + std::to_string(id) + " became non-finite at step " +
                             std::to_string(step),
                         step, static_cast<std::ptrdiff_t>(id));
    }
  }
}

bool is_snapshot(std::int64_t step, std::int64_t total, std::int64_t every) {
  return every > 0 && (step % every == 0 || step == total);
}

FlowResult run_chunked(const ParticleBatch& in, std::int64_t steps, std::int64_t snapshot_every,
                       int threads, const ToSamples& to_samples, const StepperFactory& factory) {
  in.validate();
  const Eigen::Index n = in.positions.rows();
  FlowResult res;
  res.particles = in;
  res.samples.resize(n, 2);

  std::vector<std::int64_t> snap_steps;
  for (std::int64_t s = 0; s <= steps; ++s)
    if (is_snapshot(s, steps, snapshot_every)) snap_steps.push_back(s);
  res.snapshots.resize(snap_steps.size());
  for (std::size_t k = 0; k < snap_steps.size(); ++k) {
    res.snapshots[k].step = snap_steps[k];
    res.snapshots[k].samples.resize(n, 2);
  }

  parallel_chunks(static_cast<std::size_t>(n), kChunk, threads,
                  [&](std::size_t begin, std::size_t end) {
    const auto b = static_cast<Eigen::Index>(begin);
    const auto len = static_cast<Eigen::Index>(end - begin);
    Matrix pos = in.positions.middleRows(b, len);
    const std::span<const std::uint64_t> ids(in.ids.data() + begin, end - begin);
    Stepper step = factory(pos, ids);
    std::size_t next_snap = 0;
    auto maybe_snapshot = [&](std::int64_t s) {
      if (next_snap < snap_steps.size() && snap_steps[next_snap] == s) {
        res.snapshots[next_snap].samples.middleRows(b, len) = to_samples(pos);
        ++next_snap;
      }
    };
    maybe_snapshot(0);
    for (std::int64_t s = 0; s < steps; ++s) {
      step(s);
      check_rows(pos, ids, s + 1);
      maybe_snapshot(s + 1);
    }
    res.particles.positions.middleRows(b, len) = pos;
    res.samples.middleRows(b, len) = to_samples(pos);
  });
  return res;
}

void add_noise(Matrix& pos, std::span<const std::uint64_t> ids, std::uint64_t seed,
               std::int64_t step, double scale) {
  if (scale == 0.0) return;
  for (Eigen::Index i = 0; i < pos.rows(); ++i) {
    const CounterRng rng(seed, ids[static_cast<std::size_t>(i)]);
    const auto [a, b] = rng.normal_pair(static_cast<std::uint64_t>(step));
    pos(i, 0) += scale * a;
    pos(i, 1) += scale * b;
  }
}

}  // namespace

FlowResult refine_data_space(const RatioStack& stack, const ParticleBatch& batch,
                             const FlowConfig& cfg) {
  cfg.validate();
  stack.validate();
  if (batch.space != Space::Data) throw ConfigError("refine_data_space needs data-space particles");
  const double noise = std::sqrt(2.0 * cfg.gamma * cfg.eta);
  return run_chunked(
      batch, cfg.steps, cfg.snapshot_every, cfg.threads, [](const Matrix& p) { return p; },
      [&](Matrix& pos, std::span<const std::uint64_t> ids) -> Stepper {
        return [&pos, ids, &stack, &cfg, noise](std::int64_t s) {
          const auto lg = logit_grad_data(stack, pos);
          pos += cfg.eta * drift(cfg.divergence, lg.logit, lg.grad);
          add_noise(pos, ids, cfg.seed, s, noise);
        };
      });
}

FlowResult refine_latent(const models::GeneratorModel& gen, const RatioStack& stack,
                         const ParticleBatch& latents, const FlowConfig& cfg) {
  cfg.validate();
  stack.validate();
  if (latents.space != Space::Latent) throw ConfigError("refine_latent needs latent particles");
  const double noise = std::sqrt(2.0 * cfg.gamma * cfg.eta);
  return run_chunked(
      latents, cfg.steps, cfg.snapshot_every, cfg.threads,
      [&gen](const Matrix& z) { return models::generate(gen, z); },
      [&](Matrix& pos, std::span<const std::uint64_t> ids) -> Stepper {
        return [&pos, ids, &gen, &stack, &cfg, noise](std::int64_t s) {
          pos += cfg.eta * latent_drift(gen, stack, pos, cfg.divergence);
          add_noise(pos, ids, cfg.seed, s, noise);
        };
      });
}

FlowResult ddls_refine(const models::GeneratorModel& gen, const RatioStack& stack,
                       const ParticleBatch& latents, const DdlsConfig& cfg) {
  cfg.validate();
  stack.validate();
  if (latents.space != Space::Latent) throw ConfigError("ddls_refine needs latent particles");
  const double noise = cfg.noise_scale * std::sqrt(cfg.step_size);
  return run_chunked(
      latents, cfg.steps, cfg.snapshot_every, cfg.threads,
      [&gen](const Matrix& z) { return models::generate(gen, z); },
      [&](Matrix& pos, std::span<const std::uint64_t> ids) -> Stepper {
        return [&pos, ids, &gen, &stack, &cfg, noise](std::int64_t s) {
          pos += (0.5 * cfg.step_size) * ddls_drift(gen, stack, pos);
          add_noise(pos, ids, cfg.seed, s, noise);
        };
      });
}

FlowResult dot_refine(const models::GeneratorModel& gen, const RatioStack& stack,
                      const ParticleBatch& latents, const DotConfig& cfg) {
  cfg.validate();
  stack.validate();
  if (latents.space != Space::Latent) throw ConfigError("dot_refine needs latent particles");

  struct ChunkState {
    Matrix anchor;
    Matrix m;
    Matrix v;
    std::int64_t t = 0;
  };
  return run_chunked(
      latents, cfg.steps, cfg.snapshot_every, cfg.threads,
      [&gen](const Matrix& z) { return models::generate(gen, z); },
      [&](Matrix& pos, std::span<const std::uint64_t>) -> Stepper {
        auto st = std::make_shared<ChunkState>();
        st->anchor = pos;
        st->m = Matrix::Zero(pos.rows(), pos.cols());
        st->v = Matrix::Zero(pos.rows(), pos.cols());
        return [&pos, st, &gen, &stack, &cfg](std::int64_t) {
          const Matrix g = dot_gradient(gen, stack, pos, st->anchor, cfg.lambda_prox);
          ++st->t;
          nn::adam_update(pos, g, st->m, st->v, st->t, cfg.adam);
        };
      });
}

}  // namespace dgflow::refine
