// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/models.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "dgflow/errors.hpp"
#include "dgflow/random.hpp"

namespace dgflow::models {

std::string to_string(DiscKind kind) {
  return kind == DiscKind::NsLogit ? "ns_logit" : "wgan_critic";
}

DiscKind parse_disc_kind(const std::string& name) {
  if (name == "ns_logit") return DiscKind::NsLogit;
  if (name == "wgan_critic") return DiscKind::WganCritic;
  throw ConfigError("unknown discriminator kind '" + name + "'");
}

namespace {

std::vector<int> widths(int in, const ArchConfig& arch, int out) {
  if (arch.hidden <= 0 || arch.depth < 0) throw ConfigError("invalid architecture");
  std::vector<int> dims{in};
  for (int i = 0; i < arch.depth; ++i) dims.push_back(arch.hidden);
  dims.push_back(out);
  return dims;
}

void require_two_columns(const Matrix& m, const char* what) {
  if (m.cols() != 2)
    throw ConfigError(std::string(what) + " must have 2 columns, got " +
                      std::to_string(m.cols()));
}

}  // namespace

GeneratorModel make_generator(const ArchConfig& arch, std::uint64_t seed) {
  const auto dims = widths(2, arch, 2);
  return {nn::make_mlp(dims, nn::Activation::ReLU, nn::Activation::Identity, seed)};
}

DiscriminatorModel make_discriminator(const ArchConfig& arch, DiscKind kind,
                                      std::uint64_t seed) {
  const auto dims = widths(2, arch, 1);
  return {nn::make_mlp(dims, nn::Activation::ReLU, nn::Activation::Identity, seed), kind};
}

VaeModel make_vae(const ArchConfig& arch, std::uint64_t seed) {
  VaeModel vae;
  vae.encoder = nn::make_mlp(widths(2, arch, 4), nn::Activation::ReLU, nn::Activation::Identity,
                             derive_seed(seed, 1));
  vae.decoder = nn::make_mlp(widths(2, arch, 2), nn::Activation::ReLU, nn::Activation::Identity,
                             derive_seed(seed, 2));
  vae.obs_sigma = 0.1;
  return vae;
}

Matrix sample_prior(std::size_t n, std::uint64_t seed) {
  Matrix z(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const CounterRng rng(seed, static_cast<std::uint64_t>(i));
    const auto [a, b] = rng.normal_pair(0);
    z(i, 0) = a;
    z(i, 1) = b;
  }
  return z;
}

Matrix generate(const GeneratorModel& gen, const Matrix& latents) {
  require_two_columns(latents, "latents");
  return nn::predict(gen.net, latents);
}

GeneratorModel decoder_as_generator(const VaeModel& vae) { return {vae.decoder}; }

VaeOutput vae_reconstruct(const VaeModel& vae, const Matrix& x, std::uint64_t seed) {
  require_two_columns(x, "VAE input");
  const Matrix enc = nn::predict(vae.encoder, x);
  VaeOutput out;
  out.mean = enc.leftCols(2);
  out.logvar = enc.rightCols(2).cwiseMax(kLogvarMin).cwiseMin(kLogvarMax);
  out.noise = sample_prior(static_cast<std::size_t>(x.rows()), seed);
  const Matrix z =
      out.mean + ((0.5 * out.logvar.array()).exp() * out.noise.array()).matrix();
  out.reconstruction = nn::predict(vae.decoder, z);
  return out;
}

ElboTerms vae_elbo(const VaeModel& vae, const Matrix& x, std::uint64_t seed) {
  const auto r = vae_reconstruct(vae, x, seed);
  const double var = vae.obs_sigma * vae.obs_sigma;
  const double log_norm = -std::log(2.0 * std::numbers::pi * var);
  const double n = static_cast<double>(x.rows());
  ElboTerms t;
  t.reconstruction =
      log_norm - (x - r.reconstruction).rowwise().squaredNorm().sum() / (2.0 * var) / n;
  t.kl = 0.5 *
         (r.logvar.array().exp() + r.mean.array().square() - 1.0 - r.logvar.array()).sum() / n;
  t.elbo = t.reconstruction - t.kl;
  return t;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string Checkpoint::kind() const {
  switch (model.index()) {
    case 0:
      return "generator";
    case 1:
      return "discriminator";
    default:
      return "vae";
  }
}

const GeneratorModel& Checkpoint::generator() const {
  if (const auto* g = std::get_if<GeneratorModel>(&model)) return *g;
  throw ConfigError("checkpoint holds a " + kind() + ", not a generator");
}

const DiscriminatorModel& Checkpoint::discriminator() const {
  if (const auto* d = std::get_if<DiscriminatorModel>(&model)) return *d;
  throw ConfigError("checkpoint holds a " + kind() + ", not a discriminator");
}

const VaeModel& Checkpoint::vae() const {
  if (const auto* v = std::get_if<VaeModel>(&model)) return *v;
  throw ConfigError("checkpoint holds a " + kind() + ", not a vae");
}

namespace {

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const nn::Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void append_net(const nn::Mlp& net, const char* role, std::size_t& index, Json& layers,
                Json& weights) {
  for (std::size_t k = 0; k < net.layers.size(); ++k, ++index) {
    const auto& l = net.layers[k];
    Json desc = {{"in", l.in()}, {"out", l.out()}, {"activation", nn::to_string(l.activation)}};
    if (role != nullptr) desc["net"] = role;
    layers.push_back(std::move(desc));
    const std::string p = "L" + std::to_string(index);
    weights[p + ".w"] = matrix_json(l.weight);
    weights[p + ".b"] = vector_json(l.bias);
    if (net.spectral_norm) {
      weights[p + ".u"] = vector_json(net.power_iter_state[k].u);
      weights[p + ".v"] = vector_json(net.power_iter_state[k].v);
    }
  }
}

[[noreturn]] void parse_fail(const std::string& msg) { throw CheckpointParseError(msg); }

const Json& field(const Json& obj, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) parse_fail("missing field '" + key + "'");
  return obj.at(key);
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) parse_fail(where + " is not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) parse_fail(where + " is not finite");
  return d;
}

int count(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) parse_fail(where + " is not an integer");
  const auto i = v.get<long long>();
  if (i <= 0 || i > (1 << 24)) throw CheckpointShapeError(where + " out of range");
  return static_cast<int>(i);
}

nn::Vector parse_vector(const Json& v, Eigen::Index expected, const std::string& name) {
  if (!v.is_array()) parse_fail("weight '" + name + "' is not an array");
  if (static_cast<Eigen::Index>(v.size()) != expected)
    throw CheckpointShapeError("weight '" + name + "' has length " + std::to_string(v.size()) +
                               ", expected " + std::to_string(expected));
  nn::Vector out(expected);
  for (Eigen::Index i = 0; i < expected; ++i)
    out(i) = number(v[static_cast<std::size_t>(i)], name + "[" + std::to_string(i) + "]");
  return out;
}

Matrix parse_matrix(const Json& v, Eigen::Index rows, Eigen::Index cols,
                    const std::string& name) {
  if (!v.is_array()) parse_fail("weight '" + name + "' is not an array");
  if (static_cast<Eigen::Index>(v.size()) != rows)
    throw CheckpointShapeError("weight '" + name + "' has " + std::to_string(v.size()) +
                               " rows, expected " + std::to_string(rows));
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    out.row(r) = parse_vector(v[static_cast<std::size_t>(r)], cols,
                              name + "[" + std::to_string(r) + "]")
                     .transpose();
  return out;
}

struct ParsedLayer {
  int in;
  int out;
  nn::Activation activation;
  std::string net;
};

nn::Mlp build_net(const std::vector<ParsedLayer>& descs, std::size_t first, std::size_t last,
                  const Json& weights, bool spectral) {
  nn::Mlp net;
  for (std::size_t i = first; i < last; ++i) {
    const auto& d = descs[i];
    const std::string p = "L" + std::to_string(i);
    nn::Layer l;
    l.activation = d.activation;
    l.weight = parse_matrix(field(weights, p + ".w"), d.out, d.in, p + ".w");
    l.bias = parse_vector(field(weights, p + ".b"), d.out, p + ".b");
    net.layers.push_back(std::move(l));
    if (spectral) {
      net.power_iter_state.push_back({parse_vector(field(weights, p + ".u"), d.out, p + ".u"),
                                      parse_vector(field(weights, p + ".v"), d.in, p + ".v")});
    }
  }
  net.spectral_norm = spectral;
  try {
    net.validate();
  } catch (const ConfigError& e) {
    throw CheckpointShapeError(e.what());
  }
  return net;
}

void require_io(const nn::Mlp& net, int in, int out, const std::string& what) {
  if (net.input_dim() != in || net.output_dim() != out)
    throw CheckpointShapeError(what + " must map R^" + std::to_string(in) + " -> R^" +
                               std::to_string(out) + ", got R^" +
                               std::to_string(net.input_dim()) + " -> R^" +
                               std::to_string(net.output_dim()));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = ckpt.kind();
  Json layers = Json::array();
  Json weights = Json::object();
  std::size_t index = 0;
  if (const auto* g = std::get_if<GeneratorModel>(&ckpt.model)) {
    append_net(g->net, nullptr, index, layers, weights);
  } else if (const auto* d = std::get_if<DiscriminatorModel>(&ckpt.model)) {
    j["disc_kind"] = to_string(d->kind);
    j["spectral_norm"] = d->net.spectral_norm;
    append_net(d->net, nullptr, index, layers, weights);
  } else {
    const auto& v = std::get<VaeModel>(ckpt.model);
    j["obs_sigma"] = v.obs_sigma;
    append_net(v.encoder, "encoder", index, layers, weights);
    append_net(v.decoder, "decoder", index, layers, weights);
  }
  j["layers"] = std::move(layers);
  j["weights"] = std::move(weights);
  j["meta"] = ckpt.meta.is_null() ? Json::object() : ckpt.meta;
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    parse_fail(std::string("malformed checkpoint JSON: ") + e.what());
  }
  if (!j.is_object()) parse_fail("checkpoint is not a JSON object");
  const Json& version = field(j, "format_version");
  if (!version.is_number_integer()) parse_fail("format_version is not an integer");
  if (version.get<long long>() != kCheckpointVersion)
    throw CheckpointVersionError("unsupported checkpoint format_version " + version.dump() +
                                 " (this build reads " + std::to_string(kCheckpointVersion) +
                                 ")");
  const Json& kind_j = field(j, "kind");
  if (!kind_j.is_string()) parse_fail("kind is not a string");
  const std::string kind = kind_j.get<std::string>();

  const Json& layers_j = field(j, "layers");
  if (!layers_j.is_array() || layers_j.empty()) parse_fail("layers must be a non-empty array");
  std::vector<ParsedLayer> descs;
  for (std::size_t i = 0; i < layers_j.size(); ++i) {
    const auto& lj = layers_j[i];
    const std::string where = "layers[" + std::to_string(i) + "]";
    ParsedLayer d;
    d.in = count(field(lj, "in"), where + ".in");
    d.out = count(field(lj, "out"), where + ".out");
    const Json& act = field(lj, "activation");
    if (!act.is_string()) parse_fail(where + ".activation is not a string");
    try {
      d.activation = nn::parse_activation(act.get<std::string>());
    } catch (const ConfigError& e) {
      parse_fail(where + ": " + e.what());
    }
    if (lj.contains("net")) {
      if (!lj["net"].is_string()) parse_fail(where + ".net is not a string");
      d.net = lj["net"].get<std::string>();
    }
    descs.push_back(d);
  }
  const Json& weights = field(j, "weights");
  if (!weights.is_object()) parse_fail("weights is not an object");

  Checkpoint ckpt;
  if (j.contains("meta")) {
    if (!j["meta"].is_object()) parse_fail("meta is not an object");
    ckpt.meta = j["meta"];
  }

  if (kind == "generator") {
    GeneratorModel g{build_net(descs, 0, descs.size(), weights, false)};
    require_io(g.net, 2, 2, "generator");
    ckpt.model = std::move(g);
  } else if (kind == "discriminator") {
    const Json& dk = field(j, "disc_kind");
    if (!dk.is_string()) parse_fail("disc_kind is not a string");
    DiscriminatorModel d;
    try {
      d.kind = parse_disc_kind(dk.get<std::string>());
    } catch (const ConfigError& e) {
      parse_fail(e.what());
    }
    bool spectral = false;
    if (j.contains("spectral_norm")) {
      if (!j["spectral_norm"].is_boolean()) parse_fail("spectral_norm is not a boolean");
      spectral = j["spectral_norm"].get<bool>();
    }
    d.net = build_net(descs, 0, descs.size(), weights, spectral);
    require_io(d.net, 2, 1, "discriminator");
    ckpt.model = std::move(d);
  } else if (kind == "vae") {
    std::size_t split = 0;
    while (split < descs.size() && descs[split].net == "encoder") ++split;
    for (std::size_t i = split; i < descs.size(); ++i)
      if (descs[i].net != "decoder")
        parse_fail("vae layers must be encoder layers followed by decoder layers");
    if (split == 0 || split == descs.size())
      parse_fail("vae checkpoint needs both encoder and decoder layers");
    VaeModel v;
    v.encoder = build_net(descs, 0, split, weights, false);
    v.decoder = build_net(descs, split, descs.size(), weights, false);
    require_io(v.encoder, 2, 4, "vae encoder");
    require_io(v.decoder, 2, 2, "vae decoder");
    v.obs_sigma = number(field(j, "obs_sigma"), "obs_sigma");
    if (!(v.obs_sigma > 0.0)) parse_fail("obs_sigma must be positive");
    ckpt.model = std::move(v);
  } else {
    parse_fail("unknown checkpoint kind '" + kind + "'");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string text = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw ConfigError("write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointParseError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace dgflow::models
