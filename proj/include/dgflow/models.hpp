// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>

#include "json.hpp"

#include "dgflow/mlp.hpp"

namespace dgflow::models {

using nn::Matrix;
using Json = nlohmann::ordered_json;

/// Hidden width and number of hidden layers of the fully connected nets.
struct ArchConfig {
  int hidden = 512;
  int depth = 3;
};

/// g: R^2 -> R^2 with prior N(0, I_2).
struct GeneratorModel {
  nn::Mlp net;
};

enum class DiscKind { NsLogit, WganCritic };

std::string to_string(DiscKind kind);
DiscKind parse_disc_kind(const std::string& name);

/// d: R^2 -> R. Output is used directly as the logit of "x is real".
struct DiscriminatorModel {
  nn::Mlp net;
  DiscKind kind = DiscKind::WganCritic;
};

/// Encoder emits (mean, log-variance) of a 2D Gaussian posterior.
struct VaeModel {
  nn::Mlp encoder;  // R^2 -> R^4
  nn::Mlp decoder;  // R^2 -> R^2
  double obs_sigma = 0.1;
};

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

GeneratorModel make_generator(const ArchConfig& arch, std::uint64_t seed);
DiscriminatorModel make_discriminator(const ArchConfig& arch, DiscKind kind,
                                      std::uint64_t seed);
VaeModel make_vae(const ArchConfig& arch, std::uint64_t seed);

/// n i.i.d. N(0, I_2) rows. Row i depends only on (seed, i).
Matrix sample_prior(std::size_t n, std::uint64_t seed);

/// Row-wise g(z). Throws ConfigError unless latents has 2 columns.
Matrix generate(const GeneratorModel& gen, const Matrix& latents);

/// The VAE's decoder seen as a generator over its N(0, I) prior.
GeneratorModel decoder_as_generator(const VaeModel& vae);

struct VaeOutput {
  Matrix reconstruction;
  Matrix mean;
  Matrix logvar;  // clamped to [kLogvarMin, kLogvarMax]
  Matrix noise;   // the standard-normal draws used for reparameterization
};

/// x_hat = decoder(mean + exp(logvar / 2) * xi), xi drawn per row from seed.
VaeOutput vae_reconstruct(const VaeModel& vae, const Matrix& x, std::uint64_t seed);

struct ElboTerms {
  double elbo = 0.0;            // mean over rows
  double reconstruction = 0.0;  // mean log N(x; x_hat, obs_sigma^2 I)
  double kl = 0.0;              // mean KL(q(z|x) || N(0, I))
};

/// Single-sample ELBO estimate, averaged over rows.
ElboTerms vae_elbo(const VaeModel& vae, const Matrix& x, std::uint64_t seed);

using AnyModel = std::variant<GeneratorModel, DiscriminatorModel, VaeModel>;

struct Checkpoint {
  AnyModel model;
  Json meta = Json::object();

  std::string kind() const;  // "generator" | "discriminator" | "vae"
  const GeneratorModel& generator() const;
  const DiscriminatorModel& discriminator() const;
  const VaeModel& vae() const;
};

inline constexpr int kCheckpointVersion = 1;

/// Canonical JSON text of a checkpoint. Doubles use shortest round-trip form.
std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Parses and validates; never returns a partially filled model.
/// Throws CheckpointParseError, CheckpointVersionError or CheckpointShapeError.
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dgflow::models
