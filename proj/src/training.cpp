// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/training.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "dgflow/csv.hpp"
#include "dgflow/errors.hpp"
#include "dgflow/fdivergence.hpp"
#include "dgflow/random.hpp"

namespace dgflow::train {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Matrix gather_rows(const Matrix& data, std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<Eigen::Index> pick(0, data.rows() - 1);
  Matrix out(n, data.cols());
  for (int i = 0; i < n; ++i) out.row(i) = data.row(pick(rng));
  return out;
}

Matrix normal_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = g(rng);
  return m;
}

Matrix uniform_column(std::mt19937_64& rng, Eigen::Index rows) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, 1);
  for (Eigen::Index r = 0; r < rows; ++r) m(r, 0) = u(rng);
  return m;
}

}  // namespace

std::string to_string(GanLoss loss) {
  switch (loss) {
    case GanLoss::NonSaturating:
      return "ns";
    case GanLoss::WganGp:
      return "wgan_gp";
    case GanLoss::WganSn:
      return "wgan_sn";
  }
  return "wgan_gp";
}

GanLoss parse_gan_loss(const std::string& name) {
  if (name == "ns" || name == "non_saturating") return GanLoss::NonSaturating;
  if (name == "wgan_gp") return GanLoss::WganGp;
  if (name == "wgan_sn") return GanLoss::WganSn;
  throw ConfigError("unknown GAN loss '" + name + "' (expected ns, wgan_gp or wgan_sn)");
}

void GanConfig::validate() const {
  if (gen_iters < 0) throw ConfigError("gen_iters must be non-negative");
  if (disc_iters_per_gen <= 0) throw ConfigError("disc_iters_per_gen must be positive");
  if (batch <= 0) throw ConfigError("batch must be positive");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("Adam betas must lie in [0, 1)");
  if (gp_lambda < 0.0) throw ConfigError("gp_lambda must be non-negative");
  if (arch.hidden <= 0 || arch.depth < 0) throw ConfigError("invalid architecture");
}

models::Json GanConfig::to_json() const {
  return {{"loss", to_string(loss)},
          {"gen_iters", gen_iters},
          {"disc_iters_per_gen", disc_iters_per_gen},
          {"batch", batch},
          {"lr", lr},
          {"betas", {beta1, beta2}},
          {"gp_lambda", loss == GanLoss::WganGp ? models::Json(gp_lambda) : models::Json()},
          {"seed", seed},
          {"hidden", arch.hidden},
          {"depth", arch.depth}};
}

GanConfig GanConfig::from_json(const models::Json& j) { return from_json(j, GanConfig{}); }

GanConfig GanConfig::from_json(const models::Json& j, GanConfig c) {
  try {
    if (j.contains("loss")) c.loss = parse_gan_loss(j["loss"].get<std::string>());
    if (j.contains("gen_iters")) c.gen_iters = j["gen_iters"].get<std::int64_t>();
    if (j.contains("disc_iters_per_gen")) c.disc_iters_per_gen = j["disc_iters_per_gen"].get<int>();
    if (j.contains("batch")) c.batch = j["batch"].get<int>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("betas")) {
      c.beta1 = j["betas"].at(0).get<double>();
      c.beta2 = j["betas"].at(1).get<double>();
    }
    if (j.contains("gp_lambda") && !j["gp_lambda"].is_null())
      c.gp_lambda = j["gp_lambda"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("hidden")) c.arch.hidden = j["hidden"].get<int>();
    if (j.contains("depth")) c.arch.depth = j["depth"].get<int>();
  } catch (const models::Json::exception& e) {
    throw ConfigError(std::string("invalid GAN config: ") + e.what());
  }
  return c;
}

void LossTrace::write_csv(const std::filesystem::path& path) const {
  std::vector<std::string> header{"iter", "loss_d", "loss_g"};
  if (has_gp) header.push_back("gp");
  Matrix rows(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(header.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    rows(r, 0) = static_cast<double>(records[i].iter);
    rows(r, 1) = records[i].loss_d;
    rows(r, 2) = records[i].loss_g;
    if (has_gp) rows(r, 3) = records[i].gp;
  }
  io::write_csv(path, header, rows);
}

LossTrace LossTrace::read_csv(const std::filesystem::path& path) {
  const auto t = io::read_csv(path);
  if (t.header.size() < 3 || t.header[0] != "iter")
    throw ConfigError("'" + path.string() + "' is not a loss trace");
  LossTrace trace;
  trace.has_gp = t.header.size() == 4;
  for (Eigen::Index r = 0; r < t.rows.rows(); ++r) {
    LossRecord rec;
    rec.iter = static_cast<std::int64_t>(t.rows(r, 0));
    rec.loss_d = t.rows(r, 1);
    rec.loss_g = t.rows(r, 2);
    if (trace.has_gp) rec.gp = t.rows(r, 3);
    trace.records.push_back(rec);
  }
  return trace;
}

GanState init_gan(const GanConfig& cfg) {
  cfg.validate();
  GanState s;
  s.gen = models::make_generator(cfg.arch, derive_seed(cfg.seed, 11));
  const auto kind = cfg.loss == GanLoss::NonSaturating ? models::DiscKind::NsLogit
                                                       : models::DiscKind::WganCritic;
  s.disc = models::make_discriminator(cfg.arch, kind, derive_seed(cfg.seed, 12));
  if (cfg.loss == GanLoss::WganSn) {
    nn::enable_spectral_norm(s.disc.net, derive_seed(cfg.seed, 13));
    nn::spectral_step(s.disc.net, 1);
  }
  return s;
}

DiscLoss discriminator_loss(const models::DiscriminatorModel& disc, const DiscBatch& batch,
                            GanLoss loss, double gp_lambda) {
  const Eigen::Index n = batch.real.rows();
  const Eigen::Index m = batch.fake.rows();
  if (n == 0 || m == 0) throw ConfigError("discriminator batch is empty");
  Matrix stacked(n + m, batch.real.cols());
  stacked.topRows(n) = batch.real;
  stacked.bottomRows(m) = batch.fake;
  const auto fwd = nn::mlp_forward(disc.net, stacked);
  const auto& d = fwd.outputs;

  DiscLoss out;
  Matrix og(n + m, 1);
  double loss_real = 0.0;
  double loss_fake = 0.0;
  if (loss == GanLoss::NonSaturating) {
    for (Eigen::Index i = 0; i < n; ++i) {
      loss_real += softplus(-d(i, 0));
      og(i, 0) = -sigmoid(-d(i, 0)) / static_cast<double>(n);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      loss_fake += softplus(d(n + i, 0));
      og(n + i, 0) = sigmoid(d(n + i, 0)) / static_cast<double>(m);
    }
    out.loss = loss_real / static_cast<double>(n) + loss_fake / static_cast<double>(m);
  } else {
    loss_real = d.topRows(n).sum() / static_cast<double>(n);
    loss_fake = d.bottomRows(m).sum() / static_cast<double>(m);
    og.topRows(n).setConstant(-1.0 / static_cast<double>(n));
    og.bottomRows(m).setConstant(1.0 / static_cast<double>(m));
    out.loss = loss_fake - loss_real;
  }
  out.grads = nn::mlp_backward(disc.net, fwd.cache, og).params;

  if (loss == GanLoss::WganGp) {
    if (batch.eps.rows() != std::min(n, m)) throw ConfigError("interpolation weights missing");
    const Eigen::Index k = batch.eps.rows();
    Matrix interp(k, batch.real.cols());
    for (Eigen::Index i = 0; i < k; ++i) {
      const double e = batch.eps(i, 0);
      interp.row(i) = e * batch.real.row(i) + (1.0 - e) * batch.fake.row(i);
    }
    auto pen = nn::gp_param_gradient(disc.net, interp);
    out.gp = pen.penalty;
    out.loss += gp_lambda * pen.penalty;
    out.grads.add_scaled(pen.params, gp_lambda);
  }
  return out;
}

std::pair<double, nn::MlpGrads> generator_loss(const models::GeneratorModel& gen,
                                               const models::DiscriminatorModel& disc,
                                               const Matrix& latents, GanLoss loss) {
  const Eigen::Index n = latents.rows();
  const auto gfwd = nn::mlp_forward(gen.net, latents);
  const auto dfwd = nn::mlp_forward(disc.net, gfwd.outputs);
  Matrix og(n, 1);
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = dfwd.outputs(i, 0);
    if (loss == GanLoss::NonSaturating) {
      value += softplus(-d);
      og(i, 0) = -sigmoid(-d) / static_cast<double>(n);
    } else {
      value -= d;
      og(i, 0) = -1.0 / static_cast<double>(n);
    }
  }
  const Matrix dx = nn::mlp_backward_input(disc.net, dfwd.cache, og);
  auto grads = nn::mlp_backward(gen.net, gfwd.cache, dx).params;
  return {value / static_cast<double>(n), std::move(grads)};
}

GanResult train_gan(const Matrix& data, const GanConfig& cfg, std::optional<GanState> resume) {
  cfg.validate();
  if (data.rows() == 0 || data.cols() != 2) throw ConfigError("training data must be n x 2, n > 0");
  GanState state = resume ? std::move(*resume) : init_gan(cfg);
  const std::int64_t start = state.iterations;

  nn::AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, 1e-8};
  auto gen_opt = nn::AdamState::for_net(state.gen.net, adam);
  auto disc_opt = nn::AdamState::for_net(state.disc.net, adam);
  std::mt19937_64 rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(start)));

  GanResult res;
  res.trace.has_gp = cfg.loss == GanLoss::WganGp;
  res.trace.records.reserve(static_cast<std::size_t>(cfg.gen_iters));

  for (std::int64_t it = 0; it < cfg.gen_iters; ++it) {
    const std::int64_t iter = start + it;
    LossRecord rec;
    rec.iter = iter;
    for (int k = 0; k < cfg.disc_iters_per_gen; ++k) {
      DiscBatch b;
      b.real = gather_rows(data, rng, cfg.batch);
      b.fake = nn::predict(state.gen.net, normal_matrix(rng, cfg.batch, 2));
      if (cfg.loss == GanLoss::WganGp) b.eps = uniform_column(rng, cfg.batch);
      auto dl = discriminator_loss(state.disc, b, cfg.loss, cfg.gp_lambda);
      if (!std::isfinite(dl.loss))
        throw NumericError("non-finite discriminator loss at iteration " + std::to_string(iter),
                           iter);
      nn::adam_step(disc_opt, state.disc.net, dl.grads);
      if (cfg.loss == GanLoss::WganSn) nn::spectral_step(state.disc.net, 1);
      rec.loss_d = dl.loss;
      rec.gp = dl.gp;
    }
    auto [gl, gg] = generator_loss(state.gen, state.disc, normal_matrix(rng, cfg.batch, 2),
                                   cfg.loss);
    if (!std::isfinite(gl))
      throw NumericError("non-finite generator loss at iteration " + std::to_string(iter), iter);
    nn::adam_step(gen_opt, state.gen.net, gg);
    rec.loss_g = gl;
    res.trace.records.push_back(rec);
  }
  res.gen = std::move(state.gen);
  res.disc = std::move(state.disc);
  res.iterations = start + cfg.gen_iters;
  return res;
}

// ---------------------------------------------------------------------------
// VAE

VaeLossGrad vae_loss_grad(const models::VaeModel& vae, const Matrix& x, const Matrix& xi) {
  const Eigen::Index n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double var = vae.obs_sigma * vae.obs_sigma;

  const auto efwd = nn::mlp_forward(vae.encoder, x);
  const Matrix mean = efwd.outputs.leftCols(2);
  const Matrix raw_lv = efwd.outputs.rightCols(2);
  const Matrix lv = raw_lv.cwiseMax(models::kLogvarMin).cwiseMin(models::kLogvarMax);
  const Matrix s = (0.5 * lv.array()).exp().matrix();
  const Matrix z = mean + s.cwiseProduct(xi);
  const auto dfwd = nn::mlp_forward(vae.decoder, z);
  const Matrix diff = x - dfwd.outputs;

  VaeLossGrad out;
  const double recon_nll = (diff.rowwise().squaredNorm().sum() / (2.0 * var)) * inv_n +
                           std::log(2.0 * std::numbers::pi * var);
  const double kl =
      0.5 * (lv.array().exp() + mean.array().square() - 1.0 - lv.array()).sum() * inv_n;
  out.neg_elbo = recon_nll + kl;

  const Matrix dxhat = -diff / var * inv_n;
  auto dback = nn::mlp_backward(vae.decoder, dfwd.cache, dxhat);
  out.decoder = std::move(dback.params);
  const Matrix& dz = dback.input;

  Matrix denc(n, 4);
  denc.leftCols(2) = dz + mean * inv_n;
  Matrix dlv = (dz.array() * xi.array() * s.array() * 0.5).matrix() +
               (0.5 * inv_n) * (lv.array().exp() - 1.0).matrix();
  dlv = (raw_lv.array() < models::kLogvarMin || raw_lv.array() > models::kLogvarMax)
            .select(0.0, dlv);
  denc.rightCols(2) = dlv;
  out.encoder = nn::mlp_backward(vae.encoder, efwd.cache, denc).params;
  return out;
}

VaeResult train_vae(const Matrix& data, int epochs, const VaeConfig& cfg,
                    std::optional<models::VaeModel> init) {
  if (data.rows() == 0 || data.cols() != 2) throw ConfigError("training data must be n x 2, n > 0");
  if (epochs < 0 || cfg.batch <= 0) throw ConfigError("invalid VAE training configuration");
  VaeResult res;
  res.vae = init ? std::move(*init) : models::make_vae(cfg.arch, derive_seed(cfg.seed, 21));
  nn::AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  auto enc_opt = nn::AdamState::for_net(res.vae.encoder, adam);
  auto dec_opt = nn::AdamState::for_net(res.vae.decoder, adam);
  std::mt19937_64 rng(derive_seed(cfg.seed, 22));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);

  for (int ep = 0; ep < epochs; ++ep) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      Matrix x(static_cast<Eigen::Index>(end - start), 2);
      for (std::size_t i = start; i < end; ++i)
        x.row(static_cast<Eigen::Index>(i - start)) = data.row(order[i]);
      const Matrix xi = normal_matrix(rng, x.rows(), 2);
      auto lg = vae_loss_grad(res.vae, x, xi);
      if (!std::isfinite(lg.neg_elbo))
        throw NumericError("non-finite ELBO in epoch " + std::to_string(ep), ep);
      nn::adam_step(enc_opt, res.vae.encoder, lg.encoder);
      nn::adam_step(dec_opt, res.vae.decoder, lg.decoder);
      total += -lg.neg_elbo;
      ++batches;
    }
    res.epoch_elbo.push_back(total / static_cast<double>(batches));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Corrector

Sampler sampler_of(const models::GeneratorModel& gen) {
  return [gen](std::size_t n, std::uint64_t seed) {
    return models::generate(gen, models::sample_prior(n, seed));
  };
}

Sampler sampler_of(const models::VaeModel& vae) {
  return sampler_of(models::decoder_as_generator(vae));
}

models::DiscriminatorModel finetune_corrector(const models::DiscriminatorModel& d_phi,
                                              const Sampler& gen_phi, const Sampler& gen_theta,
                                              const CorrectorConfig& cfg) {
  if (cfg.iters < 0 || cfg.batch <= 0) throw ConfigError("invalid corrector configuration");
  models::DiscriminatorModel d_lambda = d_phi;
  d_lambda.kind = models::DiscKind::NsLogit;
  auto opt = nn::SgdState::for_net(d_lambda.net, cfg.sgd_lr, cfg.momentum);
  const auto batch = static_cast<std::size_t>(cfg.batch);
  for (std::int64_t it = 0; it < cfg.iters; ++it) {
    const auto step_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(it));
    DiscBatch b;
    b.real = gen_phi(batch, derive_seed(step_seed, 1));
    b.fake = gen_theta(batch, derive_seed(step_seed, 2));
    auto dl = discriminator_loss(d_lambda, b, GanLoss::NonSaturating, 0.0);
    if (!std::isfinite(dl.loss))
      throw NumericError("non-finite corrector loss at iteration " + std::to_string(it), it);
    nn::sgd_step(opt, d_lambda.net, dl.grads);
  }
  return d_lambda;
}

}  // namespace dgflow::train
