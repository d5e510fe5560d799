// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dgflow/datasets.hpp"
#include "dgflow/models.hpp"

namespace dgflow::metrics {

using nn::Matrix;

/// A sample counts as high quality within this many mode standard deviations.
inline constexpr double kHighQualitySigmas = 4.0;
inline constexpr double kKdeBandwidth = 0.1;

/// Percentage of rows whose nearest 25-Gaussians mode is within
/// 4 * mode std. Throws ConfigError on an empty sample set.
double pct_high_quality(const Matrix& samples, const data::ModeTable& modes);

/// Sum over reference rows of log p_hat(x), where p_hat is an isotropic
/// Gaussian KDE with bandwidth h fitted on `generated`. Uses log-sum-exp.
double kde_score(const Matrix& generated, const Matrix& reference,
                 double bandwidth = kKdeBandwidth, int threads = 1);

struct MetricReport {
  double pct_high_quality = 0.0;
  double kde_score = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  int run = 0;
};

struct MetricSummary {
  std::vector<MetricReport> runs;
  double pct_hq_mean = 0.0;
  double pct_hq_std = 0.0;
  double kde_mean = 0.0;
  double kde_std = 0.0;

  models::Json to_json() const;
};

/// Scores `runs` disjoint consecutive slices of `per_run` samples each.
/// Standard deviations are population (1/N) deviations over runs.
MetricSummary evaluate_run(const Matrix& samples, const Matrix& reference, int runs = 10,
                           int per_run = 5000, std::uint64_t seed = 0, int threads = 1);

struct MethodRow {
  std::string method;
  MetricSummary summary;
};

/// `method,pct_hq_mean,pct_hq_std,kde_mean,kde_std`
void write_results_table(const std::filesystem::path& path, const std::vector<MethodRow>& rows);

}  // namespace dgflow::metrics
