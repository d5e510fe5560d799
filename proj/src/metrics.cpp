// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "dgflow/csv.hpp"
#include "dgflow/errors.hpp"
#include "dgflow/parallel.hpp"

namespace dgflow::metrics {

double pct_high_quality(const Matrix& samples, const data::ModeTable& modes) {
  if (samples.rows() == 0) throw ConfigError("cannot score an empty sample set");
  const double threshold = kHighQualitySigmas * modes.std;
  std::size_t good = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    if (data::nearest_mode(modes, samples(i, 0), samples(i, 1)).distance <= threshold) ++good;
  return 100.0 * static_cast<double>(good) / static_cast<double>(samples.rows());
}

double kde_score(const Matrix& generated, const Matrix& reference, double bandwidth,
                 int threads) {
  if (generated.rows() == 0 || reference.rows() == 0)
    throw ConfigError("KDE needs at least one generated and one reference point");
  if (generated.cols() != reference.cols()) throw ConfigError("KDE dimension mismatch");
  if (!(bandwidth > 0.0)) throw ConfigError("KDE bandwidth must be positive");
  const double dim = static_cast<double>(generated.cols());
  const double h2 = bandwidth * bandwidth;
  const double log_norm = -0.5 * dim * std::log(2.0 * std::numbers::pi * h2) -
                          std::log(static_cast<double>(generated.rows()));

  const auto m = static_cast<std::size_t>(reference.rows());
  std::vector<double> per_ref(m);
  parallel_chunks(m, 256, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> expo(static_cast<std::size_t>(generated.rows()));
    for (std::size_t r = begin; r < end; ++r) {
      const auto ref = reference.row(static_cast<Eigen::Index>(r));
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < generated.rows(); ++i) {
        const double e = -(generated.row(i) - ref).squaredNorm() / (2.0 * h2);
        expo[static_cast<std::size_t>(i)] = e;
        best = std::max(best, e);
      }
      double acc = 0.0;
      for (double e : expo) acc += std::exp(e - best);
      per_ref[r] = best + std::log(acc) + log_norm;
    }
  });
  double total = 0.0;
  for (double v : per_ref) total += v;
  return total;
}

models::Json MetricSummary::to_json() const {
  models::Json per = models::Json::array();
  for (const auto& r : runs)
    per.push_back({{"run", r.run},
                   {"n_samples", r.n_samples},
                   {"seed", r.seed},
                   {"pct_high_quality", r.pct_high_quality},
                   {"kde_score", r.kde_score}});
  return {{"pct_high_quality", {{"mean", pct_hq_mean}, {"std", pct_hq_std}}},
          {"kde_score", {{"mean", kde_mean}, {"std", kde_std}}},
          {"runs", std::move(per)}};
}

MetricSummary evaluate_run(const Matrix& samples, const Matrix& reference, int runs, int per_run,
                           std::uint64_t seed, int threads) {
  if (runs <= 0 || per_run <= 0) throw ConfigError("runs and per_run must be positive");
  if (samples.rows() < static_cast<Eigen::Index>(runs) * per_run)
    throw ConfigError("evaluate_run needs " + std::to_string(runs * per_run) + " samples, got " +
                      std::to_string(samples.rows()));
  const auto modes = data::ModeTable::gaussians25();
  MetricSummary s;
  for (int r = 0; r < runs; ++r) {
    const Matrix slice = samples.middleRows(static_cast<Eigen::Index>(r) * per_run, per_run);
    MetricReport rep;
    rep.run = r;
    rep.seed = seed;
    rep.n_samples = static_cast<std::size_t>(per_run);
    rep.pct_high_quality = pct_high_quality(slice, modes);
    rep.kde_score = kde_score(slice, reference, kKdeBandwidth, threads);
    s.runs.push_back(rep);
  }
  auto mean_std = [&](auto get, double& mean, double& sd) {
    mean = 0.0;
    for (const auto& r : s.runs) mean += get(r);
    mean /= static_cast<double>(runs);
    double var = 0.0;
    for (const auto& r : s.runs) var += (get(r) - mean) * (get(r) - mean);
    sd = std::sqrt(var / static_cast<double>(runs));
  };
  mean_std([](const MetricReport& r) { return r.pct_high_quality; }, s.pct_hq_mean, s.pct_hq_std);
  mean_std([](const MetricReport& r) { return r.kde_score; }, s.kde_mean, s.kde_std);
  return s;
}

void write_results_table(const std::filesystem::path& path, const std::vector<MethodRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << "method,pct_hq_mean,pct_hq_std,kde_mean,kde_std\n";
  for (const auto& r : rows)
    out << r.method << ',' << io::format_double(r.summary.pct_hq_mean) << ','
        << io::format_double(r.summary.pct_hq_std) << ',' << io::format_double(r.summary.kde_mean)
        << ',' << io::format_double(r.summary.kde_std) << '\n';
}

}  // namespace dgflow::metrics
