// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dgflow/models.hpp"
#include "dgflow/optim.hpp"

namespace dgflow::train {

using nn::Matrix;

enum class GanLoss { NonSaturating, WganGp, WganSn };

std::string to_string(GanLoss loss);
/// "ns" | "wgan_gp" | "wgan_sn"
GanLoss parse_gan_loss(const std::string& name);

struct GanConfig {
  GanLoss loss = GanLoss::WganGp;
  std::int64_t gen_iters = 10000;
  int disc_iters_per_gen = 5;
  int batch = 256;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double gp_lambda = 10.0;
  std::uint64_t seed = 0;
  models::ArchConfig arch;

  void validate() const;
  models::Json to_json() const;
  /// Overlays fields present in `j` onto `base`.
  static GanConfig from_json(const models::Json& j, GanConfig base);
  static GanConfig from_json(const models::Json& j);
};

struct LossRecord {
  std::int64_t iter = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double gp = 0.0;
};

struct LossTrace {
  std::vector<LossRecord> records;
  bool has_gp = false;

  /// `iter,loss_d,loss_g[,gp]`
  void write_csv(const std::filesystem::path& path) const;
  static LossTrace read_csv(const std::filesystem::path& path);
};

struct GanState {
  models::GeneratorModel gen;
  models::DiscriminatorModel disc;
  std::int64_t iterations = 0;
};

struct GanResult {
  models::GeneratorModel gen;
  models::DiscriminatorModel disc;
  LossTrace trace;
  std::int64_t iterations = 0;
};

/// Fresh generator / discriminator for `cfg` (spectral state attached for
/// wgan_sn).
GanState init_gan(const GanConfig& cfg);

/// Trains for cfg.gen_iters generator iterations, each preceded by
/// cfg.disc_iters_per_gen discriminator updates. When `resume` is given,
/// training continues from it and trace iterations continue its count.
/// Throws NumericError with the iteration index on a non-finite loss.
GanResult train_gan(const Matrix& data, const GanConfig& cfg,
                    std::optional<GanState> resume = std::nullopt);

struct DiscBatch {
  Matrix real;
  Matrix fake;
  Matrix eps;  // n x 1 interpolation weights, used by wgan_gp only
};

struct DiscLoss {
  double loss = 0.0;
  double gp = 0.0;  // mean penalty (before gp_lambda)
  nn::MlpGrads grads;
};

/// Discriminator objective and its parameter gradient.
///   ns:      mean softplus(-d(real)) + mean softplus(d(fake))
///   wgan_*:  mean d(fake) - mean d(real) [+ gp_lambda * mean (||grad d(x_hat)|| - 1)^2]
DiscLoss discriminator_loss(const models::DiscriminatorModel& disc, const DiscBatch& batch,
                            GanLoss loss, double gp_lambda);

/// Generator objective for fixed latents; returns value and generator grads.
std::pair<double, nn::MlpGrads> generator_loss(const models::GeneratorModel& gen,
                                               const models::DiscriminatorModel& disc,
                                               const Matrix& latents, GanLoss loss);

// ---------------------------------------------------------------------------

struct VaeConfig {
  int batch = 256;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  models::ArchConfig arch{128, 2};
};

struct VaeResult {
  models::VaeModel vae;
  std::vector<double> epoch_elbo;  // mean training ELBO per epoch
};

/// Maximizes the single-sample ELBO with Adam. Throws NumericError on a
/// non-finite ELBO.
VaeResult train_vae(const Matrix& data, int epochs, const VaeConfig& cfg,
                    std::optional<models::VaeModel> init = std::nullopt);

/// Negative mean ELBO and its gradients for a batch with fixed noise `xi`.
struct VaeLossGrad {
  double neg_elbo = 0.0;
  nn::MlpGrads encoder;
  nn::MlpGrads decoder;
};
VaeLossGrad vae_loss_grad(const models::VaeModel& vae, const Matrix& x, const Matrix& xi);

// ---------------------------------------------------------------------------

/// Draws n samples given a seed.
using Sampler = std::function<Matrix(std::size_t n, std::uint64_t seed)>;

Sampler sampler_of(const models::GeneratorModel& gen);
Sampler sampler_of(const models::VaeModel& vae);

struct CorrectorConfig {
  std::int64_t iters = 10000;
  int batch = 64;
  double sgd_lr = 1e-4;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

/// Initializes d_lambda from d_phi and fine-tunes it with binary cross-entropy
/// where samples of `gen_phi` are the positive class and samples of
/// `gen_theta` the negative class, so exp(-d_lambda(x)) estimates
/// p_theta(x) / p_phi(x).
models::DiscriminatorModel finetune_corrector(const models::DiscriminatorModel& d_phi,
                                              const Sampler& gen_phi, const Sampler& gen_theta,
                                              const CorrectorConfig& cfg);

}  // namespace dgflow::train
