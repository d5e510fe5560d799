// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/datasets.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "dgflow/csv.hpp"
#include "dgflow/errors.hpp"

namespace dgflow::data {

std::string to_string(DatasetKind kind) {
  return kind == DatasetKind::Gaussians25 ? "25gaussians" : "swissroll";
}

DatasetKind parse_dataset(const std::string& name) {
  if (name == "25gaussians") return DatasetKind::Gaussians25;
  if (name == "swissroll") return DatasetKind::Swissroll2D;
  throw ConfigError("unknown dataset '" + name + "' (expected 25gaussians or swissroll)");
}

ModeTable ModeTable::gaussians25() {
  ModeTable t;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      t.centers[5 * i + j] = {(-4.0 + 2.0 * i) / kGaussiansScale,
                              (-4.0 + 2.0 * j) / kGaussiansScale};
  t.std = kRawModeStd / kGaussiansScale;
  return t;
}

NearestMode nearest_mode(const ModeTable& modes, double x, double y) {
  NearestMode best{0, std::numeric_limits<double>::infinity()};
  double best_sq = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(modes.centers.size()); ++k) {
    const double dx = x - modes.centers[k][0];
    const double dy = y - modes.centers[k][1];
    const double sq = dx * dx + dy * dy;
    if (sq < best_sq) {
      best_sq = sq;
      best.index = k;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

Dataset2D gen_25gaussians(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("dataset size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 24);
  std::normal_distribution<double> noise(0.0, kRawModeStd);
  Dataset2D d;
  d.kind = DatasetKind::Gaussians25;
  d.normalization = kGaussiansScale;
  d.points.resize(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index r = 0; r < d.points.rows(); ++r) {
    const int k = pick(rng);
    const double cx = -4.0 + 2.0 * (k / 5);
    const double cy = -4.0 + 2.0 * (k % 5);
    const double x = cx + noise(rng);
    const double y = cy + noise(rng);
    d.points(r, 0) = x / kGaussiansScale;
    d.points(r, 1) = y / kGaussiansScale;
  }
  return d;
}

std::array<double, 2> swissroll_point(double r) {
  const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * r);
  return {t * std::cos(t) / kSwissrollScale, t * std::sin(t) / kSwissrollScale};
}

Dataset2D gen_swissroll(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("dataset size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  constexpr double kNoise = 0.25;
  Dataset2D d;
  d.kind = DatasetKind::Swissroll2D;
  d.normalization = kSwissrollScale;
  d.points.resize(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index r = 0; r < d.points.rows(); ++r) {
    const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * unif(rng));
    unif(rng);  // height axis, dropped below
    // Noise goes on all three coordinates before the height axis is dropped.
    const double x = t * std::cos(t) + kNoise * noise(rng);
    noise(rng);
    const double z = t * std::sin(t) + kNoise * noise(rng);
    d.points(r, 0) = x / kSwissrollScale;
    d.points(r, 1) = z / kSwissrollScale;
  }
  return d;
}

Dataset2D generate(DatasetKind kind, std::size_t n, std::uint64_t seed) {
  return kind == DatasetKind::Gaussians25 ? gen_25gaussians(n, seed) : gen_swissroll(n, seed);
}

void write_csv(const std::filesystem::path& path, const Matrix& points) {
  if (points.cols() != 2) throw ConfigError("dataset CSV needs exactly two columns");
  io::write_csv(path, {"x0", "x1"}, points);
}

Matrix read_csv(const std::filesystem::path& path) {
  auto t = io::read_csv(path);
  if (t.header.size() != 2 || t.header[0] != "x0" || t.header[1] != "x1")
    throw ConfigError("'" + path.string() + "' is not a point CSV (expected header x0,x1)");
  return std::move(t.rows);
}

}  // namespace dgflow::data
