// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Long running: it trains the 2D
// models from scratch.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dgflow/datasets.hpp"
#include "dgflow/errors.hpp"
#include "dgflow/fdivergence.hpp"
#include "dgflow/metrics.hpp"
#include "dgflow/models.hpp"
#include "dgflow/oracle.hpp"
#include "dgflow/parallel.hpp"
#include "dgflow/pipeline.hpp"
#include "dgflow/refine.hpp"
#include "dgflow/training.hpp"

using namespace dgflow;
using nn::Matrix;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Hidden width of every trained 2D network. DGFLOW_ACCEPT_WIDTH overrides the
// default; 512 reproduces the full protocol but takes hours on one core. The
// rest of the protocol is the library default (10000 generator iterations,
// 5 critic steps, batch 256, Adam 1e-4 with betas (0.5, 0.9)) except for the
// gradient penalty weight below.
int width() {
  static const int w = [] {
    const char* e = std::getenv("DGFLOW_ACCEPT_WIDTH");
    return e ? std::max(8, std::atoi(e)) : 128;
  }();
  return w;
}

// With a penalty weight of 10 the critic on this data stays too smooth: the
// generator drifts around and ends below 5% high-quality samples (the same
// happens with an independent reference implementation). 0.1 gives a base
// generator in the expected 15-65% regime.
constexpr double kGpLambda = 0.1;
constexpr std::uint64_t kDataSeed = 1;
constexpr std::uint64_t kTrainSeed = 1;
constexpr std::size_t kTrainRows = 100000;
constexpr std::size_t kHeldOut = 5000;
constexpr std::size_t kEvalSamples = 50000;  // 10 runs x 5000

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<std::pair<std::string, Outcome>> g_results;

void report(const std::string& id, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s %s  %s  [%.1f s]\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(),
              since(t0));
  std::fflush(stdout);
  g_results.emplace_back(id, o);
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool close_rel(double a, double b, double rel, double abs = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs;
}

double central_diff(double& p, double h, const std::function<double()>& f) {
  const double saved = p;
  p = saved + h;
  const double up = f();
  p = saved - h;
  const double down = f();
  p = saved;
  return (up - down) / (2.0 * h);
}

// --- shared 25-Gaussians experiment ---------------------------------------

struct GanSetup {
  Matrix train;
  Matrix reference;  // held out, disjoint from `train`
  train::GanResult gan;
  Matrix latents;
  double train_seconds = 0.0;
};

GanSetup& gan_setup() {
  static std::optional<GanSetup> s;
  if (!s) {
    s.emplace();
    const auto all = data::gen_25gaussians(kTrainRows + kHeldOut, kDataSeed).points;
    s->train = all.topRows(kTrainRows);
    s->reference = all.bottomRows(kHeldOut);
    train::GanConfig cfg;
    cfg.arch.hidden = width();
    cfg.seed = kTrainSeed;
    cfg.gp_lambda = kGpLambda;
    const auto t0 = Clock::now();
    s->gan = train::train_gan(s->train, cfg);
    s->train_seconds = since(t0);
    s->latents = models::sample_prior(kEvalSamples, 7);
    std::printf("   [setup] WGAN-GP width %d, penalty %.1f, %lld iterations, trained in %.1f s\n",
                width(), kGpLambda, static_cast<long long>(s->gan.iterations), s->train_seconds);
  }
  return *s;
}

metrics::MetricSummary score(const Matrix& x) {
  return metrics::evaluate_run(x, gan_setup().reference, 10, 5000, 0, 1);
}

refine::ParticleBatch latent_batch() {
  return refine::ParticleBatch::with_sequential_ids(gan_setup().latents, refine::Space::Latent);
}

struct MethodScores {
  metrics::MetricSummary base, kl, ddls, dot, kl_det;
};

MethodScores& method_scores() {
  static std::optional<MethodScores> m;
  if (!m) {
    auto& s = gan_setup();
    const refine::RatioStack stack{{s.gan.disc}};
    m.emplace();
    m->base = score(models::generate(s.gan.gen, s.latents));
    refine::FlowConfig flow;  // eta 0.01, 100 steps, gamma 0.01, KL, latent
    flow.snapshot_every = 0;
    flow.seed = 11;
    m->kl = score(refine::refine_latent(s.gan.gen, stack, latent_batch(), flow).samples);
    refine::DdlsConfig ddls;
    ddls.snapshot_every = 0;
    ddls.seed = 11;
    m->ddls = score(refine::ddls_refine(s.gan.gen, stack, latent_batch(), ddls).samples);
    refine::DotConfig dot;
    dot.snapshot_every = 0;
    m->dot = score(refine::dot_refine(s.gan.gen, stack, latent_batch(), dot).samples);
  }
  return *m;
}

std::string hq_kde(const metrics::MetricSummary& s) {
  return fmt("%.2f+-%.2f / %.0f+-%.0f", s.pct_hq_mean, s.pct_hq_std, s.kde_mean, s.kde_std);
}

// --- criteria ----------------------------------------------------------------

Outcome ac1() {
  const auto& m = method_scores();
  const double gain = m.kl.pct_hq_mean - m.base.pct_hq_mean;
  const double kde_gain = (m.kl.kde_mean - m.base.kde_mean) / std::abs(m.base.kde_mean);
  const bool pass = m.kl.pct_hq_mean >= 80.0 && gain >= 25.0 && kde_gain >= 0.30;
  return {pass, fmt("base %s -> DGflow(KL) %s; HQ gain %+.2f (need >= 80 and +25), KDE gain "
                    "%.1f%% of |base| (need >= 30%%)",
                    hq_kde(m.base).c_str(), hq_kde(m.kl).c_str(), gain, 100.0 * kde_gain)};
}

Outcome ac2() {
  const auto& m = method_scores();
  const double slack = 3.0;
  const double kl = m.kl.pct_hq_mean, ddls = m.ddls.pct_hq_mean, dot = m.dot.pct_hq_mean,
               base = m.base.pct_hq_mean;
  const bool pass = kl + slack >= ddls && ddls + slack >= dot && dot + slack >= base;
  return {pass, fmt("%%HQ KL %.2f, DDLS %.2f, DOT %.2f, base %.2f (need KL >= DDLS >= DOT >= "
                    "base within %.0f points)",
                    kl, ddls, dot, base, slack)};
}

Outcome ac3() {
  pipeline::GaussianCaseOptions o;  // N(0.5, 0.64) -> N(0, 1), 1e4 particles, eta 1e-3
  const auto r = pipeline::run_gaussian_case(o);
  std::ostringstream d;
  for (const auto& c : r.checks)
    d << fmt("t=%.1f mean %.4f (cf %.4f) var %.4f (cf %.4f); ", c.t, c.mean, c.mean_expected,
             c.var, c.var_expected);
  d << fmt("max rel err %.4f (need < 0.05), %.1f s (need < 30)", r.max_rel_error, r.seconds);
  return {r.pass && r.seconds < 30.0, d.str()};
}

Outcome ac4() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::ostringstream d;
  for (auto kind : {DivergenceKind::KL, DivergenceKind::JS, DivergenceKind::LogD})
    for (double gamma : {0.0, 0.1}) {
      pipeline::BimodalCaseOptions o;
      o.divergence = kind;
      o.gamma = gamma;
      const auto r = pipeline::run_bimodal_case(o);
      pass = pass && r.pass;
      d << fmt("%s/g=%.1f KS %.4f mass %.0e F%s; ", FDivergence(kind).name().c_str(), gamma,
               r.ks, r.max_mass_error, r.energy_monotone ? "-mono" : "-INCREASED");
    }
  const double secs = since(t0);
  d << fmt("(need KS < 0.03, mass < 1e-9, F non-increasing; %.0f s, need < 300)", secs);
  return {pass && secs < 300.0, d.str()};
}

// Table of f' written out here, independent of the library.
double table_f_prime(DivergenceKind k, double r) {
  switch (k) {
    case DivergenceKind::KL: return std::log(r) + 1.0;
    case DivergenceKind::JS: return std::log(2.0 * r / (r + 1.0));
    case DivergenceKind::LogD: return std::log(r + 1.0) + 1.0;
  }
  return 0.0;
}

Outcome ac5() {
  int bad = 0;
  double worst_fd = 0.0;
  for (auto k : {DivergenceKind::KL, DivergenceKind::JS, DivergenceKind::LogD}) {
    const FDivergence f(k);
    if (std::abs(f.f(1.0)) > 1e-15) ++bad;
    for (double r : {0.5, 1.0, 2.0})
      if (std::abs(f.f_prime(r) - table_f_prime(k, r)) > 1e-12) ++bad;
    for (int i = 0; i <= 160; ++i) {
      const double r = std::pow(10.0, -4.0 + 0.05 * i);
      const double fpp = f.f_double_prime(r);
      const double h = 1e-5 * r;
      const double fd = (f.f_prime(r + h) - f.f_prime(r - h)) / (2.0 * h);
      const double rel = std::abs(fpp - fd) / std::abs(fd);
      worst_fd = std::max(worst_fd, rel);
      if (!(fpp > 0.0) || rel > 1e-6) ++bad;
    }
  }
  return {bad == 0, fmt("f(1) = 0, f' reference values at {0.5, 1, 2} to 1e-12, f'' > 0 on [1e-4, 1e4]; "
                        "worst f'' vs FD rel err %.1e (need < 1e-6); %d violations",
                        worst_fd, bad)};
}

Outcome ac6() {
  // Part 1: grad_z f'(exp(-d(g(z)))) against central differences.
  const double h = 1e-5;
  double worst = 0.0;
  int bad = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const FDivergence f(static_cast<DivergenceKind>(seed % 3));
    const auto gen = models::make_generator({32, 3}, 500 + seed);
    const auto disc = models::make_discriminator({32, 3}, models::DiscKind::WganCritic, 600 + seed);
    const refine::RatioStack st{{disc}};
    Matrix z = models::sample_prior(1, 700 + seed);
    const Matrix v = refine::latent_drift(gen, st, z, f);
    for (int j = 0; j < 2; ++j) {
      const double fd = central_diff(z(0, j), h, [&] {
        return f.f_prime(std::exp(-nn::predict(disc.net, models::generate(gen, z))(0, 0)));
      });
      const double an = -v(0, j);
      const double rel = std::abs(an - fd) / std::max(std::abs(fd), 1e-8);
      worst = std::max(worst, rel);
      if (rel >= 1e-4) ++bad;
    }
  }
  // Part 2: gradient-penalty parameter gradient on 20 random ReLU nets.
  double worst_gp = 0.0;
  int bad_gp = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int width = 8 + static_cast<int>(seed % 3) * 4;
    const std::vector<int> dims{2, width, width, 1};
    auto net = nn::make_mlp(dims, nn::Activation::ReLU, nn::Activation::Identity, 900 + seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Matrix x(8, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = nd(rng);
    auto penalty = [&] {
      const Matrix g = nn::input_gradient(net, x);
      double s = 0.0;
      for (Eigen::Index i = 0; i < g.rows(); ++i) s += std::pow(g.row(i).norm() - 1.0, 2);
      return s / static_cast<double>(g.rows());
    };
    const auto pg = nn::gp_param_gradient(net, x);
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
      auto& l = net.layers[k];
      auto check = [&](double& p, double an) {
        const double fd = central_diff(p, h, penalty);
        const double rel = std::abs(an - fd) / std::max(std::abs(fd), 1e-6);
        worst_gp = std::max(worst_gp, rel);
        if (rel >= 1e-3) ++bad_gp;
      };
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
          check(l.weight(r, c), pg.params.weight[k](r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) check(l.bias(r), pg.params.bias[k](r));
    }
  }
  return {bad == 0 && bad_gp == 0,
          fmt("latent drift vs FD on 50 pairs: worst rel err %.1e (need < 1e-4); GP param "
              "gradient on 20 ReLU nets: worst rel err %.1e (need < 1e-3)",
              worst, worst_gp)};
}

Outcome ac7() {
  double worst_dot = 0.0;
  double worst_ddls = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto gen = models::make_generator({64, 3}, 40 + seed);
    const auto disc = models::make_discriminator({64, 3}, models::DiscKind::WganCritic, 50 + seed);
    const refine::RatioStack st{{disc}};
    const Matrix u0 = models::sample_prior(256, 60 + seed);
    const auto lg = refine::logit_grad_latent(gen, st, u0);
    const Matrix g = refine::dot_gradient(gen, st, u0, u0, 0.5);
    worst_dot = std::max(worst_dot, (g + lg.grad).cwiseAbs().maxCoeff());
    const Matrix kl = refine::latent_drift(gen, st, u0, FDivergence(DivergenceKind::KL));
    const Matrix dd = refine::ddls_drift(gen, st, u0);
    worst_ddls = std::max(worst_ddls, (kl - (dd + u0)).cwiseAbs().maxCoeff());
  }
  return {worst_dot <= 1e-12 && worst_ddls <= 1e-10,
          fmt("max |grad DOT(u0) + grad d(g(u0))| = %.1e (need <= 1e-12); max |KL drift - "
              "(DDLS drift + z)| = %.1e (need <= 1e-10)",
              worst_dot, worst_ddls)};
}

Outcome ac8() {
  auto& s = gan_setup();
  const refine::RatioStack stack{{s.gan.disc}};
  refine::FlowConfig flow;
  flow.gamma = 0.0;
  flow.snapshot_every = 0;
  flow.seed = 11;
  std::vector<Matrix> outs;
  for (int threads : {1, 2, 8}) {
    flow.threads = threads;
    outs.push_back(refine::refine_latent(s.gan.gen, stack, latent_batch(), flow).samples);
  }
  const bool identical = outs[0] == outs[1] && outs[0] == outs[2];
  const auto det = score(outs[0]);
  const auto& base = method_scores().base;
  const double gain = det.pct_hq_mean - base.pct_hq_mean;
  return {identical && gain >= 25.0,
          fmt("gamma = 0: %%HQ %.2f vs base %.2f, gain %+.2f (need >= 25); outputs for 1/2/8 "
              "workers %s",
              det.pct_hq_mean, base.pct_hq_mean, gain,
              identical ? "byte-identical" : "DIFFER")};
}

Outcome ac9() {
  auto& s = gan_setup();
  const auto t0 = Clock::now();
  // g_theta: a 2D VAE. d_phi / g_phi: a non-saturating GAN whose
  // discriminator logit estimates log(mu / p_phi).
  train::VaeConfig vc;
  vc.arch = {width(), 3};
  vc.seed = 3;
  const auto vae = train::train_vae(s.train, 20, vc).vae;
  train::GanConfig ns;
  ns.loss = train::GanLoss::NonSaturating;
  ns.arch.hidden = width();
  ns.seed = 4;
  const auto phi = train::train_gan(s.train, ns);
  train::CorrectorConfig cc;  // 10000 SGD steps, batch 64, lr 1e-4, momentum 0.9
  cc.seed = 5;
  const auto d_lambda = train::finetune_corrector(phi.disc, train::sampler_of(phi.gen),
                                                  train::sampler_of(vae), cc);
  const double train_s = since(t0);

  const auto dec = models::decoder_as_generator(vae);
  const auto z = models::sample_prior(kEvalSamples, 9);
  const auto batch = refine::ParticleBatch::with_sequential_ids(z, refine::Space::Latent);
  refine::FlowConfig flow;
  flow.snapshot_every = 0;
  flow.seed = 13;
  const auto base = score(models::generate(dec, z));
  const auto only_phi = score(refine::refine_latent(dec, {{phi.disc}}, batch, flow).samples);
  const auto both = score(refine::refine_latent(dec, {{phi.disc, d_lambda}}, batch, flow).samples);
  const double vs_phi = both.pct_hq_mean - only_phi.pct_hq_mean;
  const double vs_base = both.pct_hq_mean - base.pct_hq_mean;
  return {vs_phi >= 5.0 && vs_base >= 15.0,
          fmt("VAE %.2f, [d_phi] %.2f, [d_phi, d_lambda] %.2f: %+.2f vs [d_phi] (need >= 5), "
              "%+.2f vs VAE (need >= 15); models trained in %.0f s",
              base.pct_hq_mean, only_phi.pct_hq_mean, both.pct_hq_mean, vs_phi, vs_base,
              train_s)};
}

Outcome ac10() {
  Matrix p(1, 2);
  p << 0.25, -0.5;
  const double kde = metrics::kde_score(p, p);
  const double exact = -std::log(2.0 * std::numbers::pi * 0.01);
  const auto x = data::gen_25gaussians(1'000'000, 123).points;
  const double hq = metrics::pct_high_quality(x, data::ModeTable::gaussians25());
  const bool pass = std::abs(kde - exact) <= 1e-5 && hq >= 99.8 && hq <= 100.0;
  return {pass, fmt("single-kernel KDE %.7f vs log(1/(2 pi 0.01)) = %.7f (|diff| %.1e, need <= "
                    "1e-5; the literal 2.76700 is off by %.1e); %%HQ on 1e6 true samples %.3f "
                    "(need in [99.8, 100])",
                    kde, exact, std::abs(kde - exact), std::abs(exact - 2.76700), hq)};
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  // Optional filter: run only the listed criteria, e.g. `acceptance AC3 AC4`.
  std::vector<std::string> only(argv + 1, argv + argc);
  auto want = [&](const std::string& id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };
  const std::vector<std::pair<std::string, Outcome (*)()>> all{
      {"AC5", ac5}, {"AC6", ac6}, {"AC7", ac7}, {"AC10", ac10}, {"AC3", ac3},
      {"AC4", ac4}, {"AC1", ac1}, {"AC2", ac2}, {"AC8", ac8},   {"AC9", ac9}};
  for (const auto& [id, fn] : all)
    if (want(id)) report(id, fn);
  int failed = 0;
  for (const auto& [id, o] : g_results) failed += o.pass ? 0 : 1;
  std::printf("acceptance: %zu run, %d failed\n", g_results.size(), failed);
  return failed == 0 ? 0 : 1;
}
