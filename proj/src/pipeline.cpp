// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "dgflow/errors.hpp"

namespace dgflow::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<MethodOutput> run_compare(const models::GeneratorModel& gen,
                                      const refine::RatioStack& stack, const Matrix& reference,
                                      const CompareOptions& opt) {
  const auto z = models::sample_prior(opt.n_samples, opt.seed);
  const auto batch = refine::ParticleBatch::with_sequential_ids(z, refine::Space::Latent);
  std::vector<MethodOutput> out;
  auto score = [&](std::string name, Matrix samples, Clock::time_point t0) {
    MethodOutput m;
    m.method = std::move(name);
    m.seconds = since(t0);
    m.summary = metrics::evaluate_run(samples, reference, opt.runs, opt.per_run, opt.seed,
                                      opt.threads);
    m.samples = std::move(samples);
    out.push_back(std::move(m));
  };

  auto t0 = Clock::now();
  score("base", models::generate(gen, z), t0);

  t0 = Clock::now();
  auto dot = opt.dot;
  dot.snapshot_every = 0;
  dot.threads = opt.threads;
  score("dot", refine::dot_refine(gen, stack, batch, dot).samples, t0);

  t0 = Clock::now();
  auto ddls = opt.ddls;
  ddls.snapshot_every = 0;
  ddls.threads = opt.threads;
  score("ddls", refine::ddls_refine(gen, stack, batch, ddls).samples, t0);

  for (auto kind : {DivergenceKind::KL, DivergenceKind::JS, DivergenceKind::LogD}) {
    t0 = Clock::now();
    auto flow = opt.flow;
    flow.divergence = FDivergence(kind);
    flow.space = refine::Space::Latent;
    flow.snapshot_every = 0;
    flow.threads = opt.threads;
    score("dgflow-" + flow.divergence.name(), refine::refine_latent(gen, stack, batch, flow).samples,
          t0);
  }
  return out;
}

GaussianCaseReport run_gaussian_case(const GaussianCaseOptions& opt) {
  if (opt.check_times.empty()) throw ConfigError("gaussian case needs at least one check time");
  double t_max = 0.0;
  for (double t : opt.check_times) {
    if (!(t > 0.0)) throw ConfigError("check times must be positive");
    t_max = std::max(t_max, t);
  }
  const auto t0 = Clock::now();
  const auto mu = oracle::AnalyticDensity1D::gaussian(0.0, 1.0);
  const auto rho0 = oracle::AnalyticDensity1D::gaussian(opt.m0, std::sqrt(opt.s0_sq));
  const auto steps = static_cast<std::size_t>(std::llround(t_max / opt.eta));
  const auto run = oracle::simulate_particles_running_ratio(
      opt.particles, rho0, mu, FDivergence(DivergenceKind::KL), opt.gamma, opt.eta, steps,
      opt.seed, opt.threads);

  GaussianCaseReport rep;
  for (double t : opt.check_times) {
    const auto k = static_cast<std::size_t>(std::llround(t / opt.eta));
    const auto cf = oracle::gaussian_flow_closed_form(opt.m0, opt.s0_sq, t, opt.gamma);
    MomentCheck c;
    c.t = t;
    c.mean = run.means[k];
    c.var = run.variances[k];
    c.mean_expected = cf.mean;
    c.var_expected = cf.var;
    c.mean_rel_error = std::abs(c.mean - cf.mean) / std::abs(cf.mean);
    c.var_rel_error = std::abs(c.var - cf.var) / std::abs(cf.var);
    rep.max_rel_error = std::max({rep.max_rel_error, c.mean_rel_error, c.var_rel_error});
    rep.checks.push_back(c);
  }
  rep.pass = rep.max_rel_error < opt.tolerance;
  rep.seconds = since(t0);
  return rep;
}

oracle::AnalyticDensity1D bimodal_target() {
  return oracle::AnalyticDensity1D::mixture({{0.5, -1.5, 0.5}, {0.5, 1.5, 0.5}});
}

BimodalCaseReport run_bimodal_case(const BimodalCaseOptions& opt) {
  const auto mu = bimodal_target();
  const auto rho0 = oracle::AnalyticDensity1D::gaussian(0.3, 1.0);
  const FDivergence div(opt.divergence);
  BimodalCaseReport rep;

  auto t0 = Clock::now();
  const auto grid = oracle::solve_fpe(oracle::discretize(rho0, opt.x_min, opt.x_max, opt.cells),
                                      mu, div, opt.gamma, opt.t_end);
  rep.grid_seconds = since(t0);
  rep.max_mass_error = grid.max_mass_error;
  rep.max_energy_increase = grid.max_energy_increase;
  rep.energy_monotone = grid.energy_monotone;
  rep.grid_steps = grid.steps;
  rep.grid = grid.final;

  t0 = Clock::now();
  const auto steps = static_cast<std::size_t>(std::llround(opt.t_end / opt.eta));
  auto run = oracle::simulate_particles_running_ratio(opt.particles, rho0, mu, div, opt.gamma,
                                                      opt.eta, steps, opt.seed, opt.threads);
  rep.particle_seconds = since(t0);
  rep.ks = oracle::ks_distance(run.particles, grid.final);
  rep.particles = std::move(run.particles);
  rep.pass = rep.ks < opt.ks_tolerance && rep.max_mass_error < opt.mass_tolerance &&
             rep.energy_monotone;
  return rep;
}

}  // namespace dgflow::pipeline
