// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "dgflow/errors.hpp"
#include "dgflow/manifest.hpp"
#include "dgflow/models.hpp"
#include "support.hpp"

using namespace dgflow;
using namespace dgflow::models;
using nn::Activation;
using nn::Matrix;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool same_net(const nn::Mlp& a, const nn::Mlp& b) {
  if (a.layers.size() != b.layers.size() || a.spectral_norm != b.spectral_norm) return false;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    if (a.layers[k].weight != b.layers[k].weight || a.layers[k].bias != b.layers[k].bias ||
        a.layers[k].activation != b.layers[k].activation)
      return false;
  }
  for (std::size_t k = 0; k < a.power_iter_state.size(); ++k)
    if (a.power_iter_state[k].u != b.power_iter_state[k].u ||
        a.power_iter_state[k].v != b.power_iter_state[k].v)
      return false;
  return true;
}

// The golden fixture is make_generator({8, 2}, 42) saved with meta {"seed": 42}.
constexpr const char* kGoldenSha256 = "7d264009aafa1d9379718d12163a0a01416f936e146d48fbdac146fa8e6dd1be";

}  // namespace

TEST_CASE("sample_prior: moments and determinism") {
  const Matrix z = sample_prior(1000000, 3);
  CHECK(z == sample_prior(1000000, 3));
  const Eigen::RowVector2d mean = z.colwise().mean();
  CHECK(std::abs(mean(0)) < 0.005);
  CHECK(std::abs(mean(1)) < 0.005);
  const Matrix c = z.rowwise() - mean;
  const Matrix cov = (c.transpose() * c) / static_cast<double>(z.rows());
  CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(cov(1, 1) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::abs(cov(0, 1)) < 0.01);
  // Row i depends only on (seed, i).
  CHECK(sample_prior(10, 3) == z.topRows(10));
}

TEST_CASE("generate: identity, zero-weight and forward consistency") {
  GeneratorModel id;
  id.net.layers.push_back({Matrix::Identity(2, 2), nn::Vector::Zero(2), Activation::Identity});
  const Matrix z = sample_prior(50, 1);
  CHECK(generate(id, z) == z);

  GeneratorModel g = make_generator({16, 2}, 5);
  for (auto& l : g.net.layers) l.weight.setZero();
  g.net.layers.back().bias << 0.25, -0.5;
  const Matrix out = generate(g, z);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    CHECK(out(i, 0) == 0.25);
    CHECK(out(i, 1) == -0.5);
  }

  const GeneratorModel r = make_generator({32, 3}, 6);
  CHECK(generate(r, z) == nn::mlp_forward(r.net, z).outputs);
  CHECK(generate(r, z) == generate(r, z));
  CHECK_THROWS_AS(generate(r, Matrix::Zero(3, 3)), ConfigError);
}

TEST_CASE("default architecture is 2-512-512-512-out with ReLU hidden") {
  const auto g = make_generator(ArchConfig{}, 1);
  REQUIRE(g.net.layers.size() == 4);
  CHECK(g.net.layers[0].in() == 2);
  CHECK(g.net.layers[1].in() == 512);
  CHECK(g.net.layers[3].out() == 2);
  CHECK(g.net.layers[0].activation == Activation::ReLU);
  CHECK(g.net.layers[3].activation == Activation::Identity);
  const auto d = make_discriminator(ArchConfig{}, DiscKind::WganCritic, 1);
  CHECK(d.net.output_dim() == 1);
}

TEST_CASE("vae_reconstruct: clamped log-variance and zero encoder") {
  VaeModel v = make_vae({8, 1}, 3);
  // Identity decoder makes the reconstruction equal to the latent.
  v.decoder.layers.clear();
  v.decoder.layers.push_back({Matrix::Identity(2, 2), nn::Vector::Zero(2), Activation::Identity});
  auto& last = v.encoder.layers.back();
  last.weight.bottomRows(2).setZero();
  last.bias.tail(2).setConstant(-1e300);
  const Matrix x = testing::random_matrix(20, 2, 4);
  const auto r = vae_reconstruct(v, x, 9);
  CHECK(r.logvar.maxCoeff() == kLogvarMin);
  CHECK(r.logvar.minCoeff() == kLogvarMin);
  const Matrix expected = r.mean + std::exp(0.5 * kLogvarMin) * r.noise;
  CHECK((r.reconstruction - expected).cwiseAbs().maxCoeff() < 1e-15);

  VaeModel zero = make_vae({8, 1}, 3);
  for (auto& l : zero.encoder.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  const auto rz = vae_reconstruct(zero, x, 10);
  CHECK(rz.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rz.logvar.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rz.reconstruction == nn::predict(zero.decoder, rz.noise));
}

TEST_CASE("vae_elbo matches a direct recomputation") {
  const VaeModel v = make_vae({16, 2}, 7);
  const Matrix x = testing::random_matrix(64, 2, 8, 0.5);
  const auto t = vae_elbo(v, x, 11);
  const auto r = vae_reconstruct(v, x, 11);
  double rec = 0.0;
  double kl = 0.0;
  const double s2 = v.obs_sigma * v.obs_sigma;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int j = 0; j < 2; ++j) {
      const double e = x(i, j) - r.reconstruction(i, j);
      rec += -0.5 * std::log(2.0 * std::numbers::pi * s2) - e * e / (2.0 * s2);
      const double m = r.mean(i, j);
      const double lv = r.logvar(i, j);
      kl += 0.5 * (m * m + std::exp(lv) - 1.0 - lv);
    }
  rec /= 64.0;
  kl /= 64.0;
  CHECK(t.reconstruction == doctest::Approx(rec).epsilon(1e-12));
  CHECK(t.kl == doctest::Approx(kl).epsilon(1e-12));
  CHECK(t.elbo == doctest::Approx(rec - kl).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip is bit exact for 100 random models") {
  const auto dir = testing::scratch_dir("ckpt");
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ArchConfig arch{4 + static_cast<int>(seed % 5) * 3, 1 + static_cast<int>(seed % 3)};
    Checkpoint c;
    switch (seed % 4) {
      case 0: c.model = make_generator(arch, seed); break;
      case 1: c.model = make_discriminator(arch, DiscKind::WganCritic, seed); break;
      case 2: {
        auto d = make_discriminator(arch, DiscKind::NsLogit, seed);
        nn::enable_spectral_norm(d.net, seed);
        c.model = d;
        break;
      }
      default: c.model = make_vae(arch, seed);
    }
    c.meta = {{"seed", seed}, {"note", "round trip"}};
    const auto p = dir / ("m" + std::to_string(seed) + ".json");
    save_checkpoint(c, p);
    const Checkpoint back = load_checkpoint(p);
    CHECK(back.kind() == c.kind());
    CHECK(back.meta == c.meta);
    if (c.kind() == "generator") CHECK(same_net(back.generator().net, c.generator().net));
    if (c.kind() == "discriminator") {
      CHECK(same_net(back.discriminator().net, c.discriminator().net));
      CHECK(back.discriminator().kind == c.discriminator().kind);
    }
    if (c.kind() == "vae") {
      CHECK(same_net(back.vae().encoder, c.vae().encoder));
      CHECK(same_net(back.vae().decoder, c.vae().decoder));
      CHECK(back.vae().obs_sigma == c.vae().obs_sigma);
    }
    const auto p2 = dir / ("m" + std::to_string(seed) + "_again.json");
    save_checkpoint(back, p2);
    CHECK(read_file(p) == read_file(p2));
  }
}

TEST_CASE("checkpoint errors are distinct and structured") {
  Checkpoint c{make_generator({4, 1}, 1), Json::object()};
  const std::string good = serialize_checkpoint(c);

  CHECK_THROWS_AS(parse_checkpoint("{not json"), CheckpointParseError);
  CHECK_THROWS_AS(parse_checkpoint("[]"), CheckpointParseError);

  Json j = Json::parse(good);
  j["format_version"] = 2;
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointVersionError);

  j = Json::parse(good);
  j["weights"]["L0.w"] = "corrupted";
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointParseError);

  j = Json::parse(good);
  j["weights"].erase("L1.b");
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointParseError);

  j = Json::parse(good);
  j["layers"][0]["out"] = 5;
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointShapeError);

  j = Json::parse(good);
  j["weights"]["L0.b"].push_back(0.0);
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointShapeError);

  j = Json::parse(good);
  j["kind"] = "flow";
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointParseError);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), CheckpointError);
}

TEST_CASE("golden generator fixture") {
  const std::filesystem::path p = std::filesystem::path(DGFLOW_FIXTURES) / "golden_generator.json";
  CHECK(manifest::sha256_file(p) == kGoldenSha256);
  const Checkpoint c = load_checkpoint(p);
  REQUIRE(c.kind() == "generator");
  CHECK(same_net(c.generator().net, make_generator({8, 2}, 42).net));
  CHECK(serialize_checkpoint(c) == read_file(p));
}
