// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

// Experiment drivers shared by the command-line tool and the acceptance suite.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgflow/metrics.hpp"
#include "dgflow/oracle.hpp"
#include "dgflow/refine.hpp"

namespace dgflow::pipeline {

using nn::Matrix;

struct CompareOptions {
  std::size_t n_samples = 50000;  // latents drawn once and shared by every method
  int runs = 10;
  int per_run = 5000;
  std::uint64_t seed = 0;
  refine::FlowConfig flow;  // divergence is overridden per row
  refine::DdlsConfig ddls;
  refine::DotConfig dot;
  int threads = 1;
};

struct MethodOutput {
  std::string method;  // base, dot, ddls, dgflow-kl, dgflow-js, dgflow-logd
  Matrix samples;
  metrics::MetricSummary summary;
  double seconds = 0.0;
};

/// Scores the base generator and every refinement method on one shared set of
/// latents, in the row order of the results table.
std::vector<MethodOutput> run_compare(const models::GeneratorModel& gen,
                                      const refine::RatioStack& stack, const Matrix& reference,
                                      const CompareOptions& opt);

/// KL flow to N(0, 1) from N(m0, s0_sq) with running-ratio particles, checked
/// against the closed-form moments at each time in `check_times`.
struct GaussianCaseOptions {
  double m0 = 0.5;
  double s0_sq = 0.64;
  std::size_t particles = 10000;
  double eta = 1e-3;
  double gamma = 0.0;
  std::vector<double> check_times{0.5, 1.0};
  double tolerance = 0.05;  // relative
  std::uint64_t seed = 1;
  int threads = 1;
};

struct MomentCheck {
  double t = 0.0;
  double mean = 0.0, mean_expected = 0.0, mean_rel_error = 0.0;
  double var = 0.0, var_expected = 0.0, var_rel_error = 0.0;
};

struct GaussianCaseReport {
  std::vector<MomentCheck> checks;
  double max_rel_error = 0.0;
  bool pass = false;
  double seconds = 0.0;
};

GaussianCaseReport run_gaussian_case(const GaussianCaseOptions& opt);

/// Bimodal target 0.5 N(-1.5, 0.5^2) + 0.5 N(1.5, 0.5^2) from N(0.3, 1): the
/// finite-volume solution against running-ratio particles at t_end.
struct BimodalCaseOptions {
  DivergenceKind divergence = DivergenceKind::KL;
  double gamma = 0.0;
  double t_end = 1.0;
  std::size_t particles = 100000;
  double eta = 1e-3;
  double x_min = -6.0, x_max = 6.0;
  std::size_t cells = 1200;
  double ks_tolerance = 0.03;
  double mass_tolerance = 1e-9;
  std::uint64_t seed = 2;
  int threads = 1;
};

struct BimodalCaseReport {
  double ks = 0.0;
  double max_mass_error = 0.0;
  double max_energy_increase = 0.0;
  bool energy_monotone = false;
  std::size_t grid_steps = 0;
  bool pass = false;
  double grid_seconds = 0.0;
  double particle_seconds = 0.0;
  oracle::Grid1D grid;
  std::vector<double> particles;
};

oracle::AnalyticDensity1D bimodal_target();
BimodalCaseReport run_bimodal_case(const BimodalCaseOptions& opt);

}  // namespace dgflow::pipeline
