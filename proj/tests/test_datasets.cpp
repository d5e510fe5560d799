// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dgflow/datasets.hpp"
#include "dgflow/errors.hpp"
#include "support.hpp"

using namespace dgflow;
using namespace dgflow::data;

namespace {

// Wilson-Hilferty upper quantile of chi-square with df degrees of freedom.
double chi2_upper(double df, double z) {
  const double a = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace

TEST_CASE("mode table geometry") {
  const auto m = ModeTable::gaussians25();
  CHECK(m.centers[0][0] == doctest::Approx(-1.41421).epsilon(1e-5));
  CHECK(m.centers[0][1] == doctest::Approx(-1.41421).epsilon(1e-5));
  CHECK(m.std == doctest::Approx(0.05 / (2.0 * std::sqrt(2.0))).epsilon(1e-15));
  CHECK(m.centers[12][0] == 0.0);
  CHECK(m.centers[12][1] == 0.0);
}

TEST_CASE("nearest_mode: centres, origin and brute force") {
  const auto m = ModeTable::gaussians25();
  for (int k = 0; k < 25; ++k) {
    const auto nm = nearest_mode(m, m.centers[k][0], m.centers[k][1]);
    CHECK(nm.index == k);
    CHECK(nm.distance == 0.0);
  }
  const auto o = nearest_mode(m, 0.0, 0.0);
  CHECK(o.index == 12);
  CHECK(o.distance == 0.0);
  // Midpoint between modes 0 and 1 ties; the lower index wins.
  const auto tie = nearest_mode(m, m.centers[0][0], 0.5 * (m.centers[0][1] + m.centers[1][1]));
  CHECK(tie.index == 0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    int best = -1;
    double best_d = 1e300;
    for (int k = 0; k < 25; ++k) {
      const double d = std::hypot(x - m.centers[k][0], y - m.centers[k][1]);
      if (d < best_d) best_d = d, best = k;
    }
    const auto nm = nearest_mode(m, x, y);
    CHECK(nm.index == best);
    CHECK(nm.distance == doctest::Approx(best_d).epsilon(1e-14));
  }
}

TEST_CASE("gen_25gaussians: determinism, normalization and mode spread") {
  CHECK(gen_25gaussians(1000, 3).points == gen_25gaussians(1000, 3).points);
  CHECK(gen_25gaussians(1000, 3).points != gen_25gaussians(1000, 4).points);
  CHECK_THROWS_AS(gen_25gaussians(0, 1), ConfigError);

  const auto d = gen_25gaussians(1000000, 11);
  CHECK(d.normalization == doctest::Approx(2.0 * std::sqrt(2.0)));
  const auto m = ModeTable::gaussians25();
  double ss = 0.0;
  std::size_t within = 0;
  for (Eigen::Index i = 0; i < d.points.rows(); ++i) {
    const auto nm = nearest_mode(m, d.points(i, 0), d.points(i, 1));
    const double dx = d.points(i, 0) - m.centers[nm.index][0];
    const double dy = d.points(i, 1) - m.centers[nm.index][1];
    ss += dx * dx + dy * dy;
    if (nm.distance <= 4.0 * m.std) ++within;
  }
  const double sd = std::sqrt(ss / (2.0 * static_cast<double>(d.points.rows())));
  CHECK(sd == doctest::Approx(0.01768).epsilon(0.02));
  // P(chi2_2 <= 16) = 1 - exp(-8)
  const double frac = static_cast<double>(within) / static_cast<double>(d.points.rows());
  CHECK(frac == doctest::Approx(1.0 - std::exp(-8.0)).epsilon(1e-3));
}

TEST_CASE("swissroll_point: curve endpoints") {
  const auto a = swissroll_point(0.0);
  CHECK(std::abs(a[0]) < 1e-12);
  CHECK(a[1] == doctest::Approx(-0.62832).epsilon(1e-5));
  // t = 4.5 pi has sin(t) = +1, so the far end sits above the origin.
  const auto b = swissroll_point(1.0);
  CHECK(std::abs(b[0]) < 1e-12);
  CHECK(b[1] == doctest::Approx(1.88496).epsilon(1e-5));
}

TEST_CASE("gen_swissroll: histogram agrees with an independent generator") {
  const std::size_t n = 100000;
  const auto d = gen_swissroll(n, 21);
  CHECK(d.normalization == 7.5);
  CHECK(gen_swissroll(100, 2).points == gen_swissroll(100, 2).points);

  // Same formula, separate code path and RNG.
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.25);
  const int bins = 20;
  auto bin_of = [&](double x, double y) {
    const int bx = std::clamp(static_cast<int>((x + 2.0) / 4.0 * bins), 0, bins - 1);
    const int by = std::clamp(static_cast<int>((y + 2.0) / 4.0 * bins), 0, bins - 1);
    return bx * bins + by;
  };
  std::vector<double> a(bins * bins, 0.0), b(bins * bins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    a[bin_of(d.points(i, 0), d.points(i, 1))] += 1.0;
    const double t = 1.5 * std::numbers::pi * (1.0 + 2.0 * u(rng));
    const double x = (t * std::cos(t) + g(rng)) / 7.5;
    const double y = (t * std::sin(t) + g(rng)) / 7.5;
    b[bin_of(x, y)] += 1.0;
  }
  double chi2 = 0.0;
  int used = 0;
  for (int k = 0; k < bins * bins; ++k) {
    if (a[k] + b[k] < 10.0) continue;
    chi2 += (a[k] - b[k]) * (a[k] - b[k]) / (a[k] + b[k]);
    ++used;
  }
  INFO("chi2 = " << chi2 << " over " << used << " bins");
  CHECK(chi2 < chi2_upper(used - 1, 3.09));
}

TEST_CASE("dataset CSV round trip is bit exact") {
  const auto dir = testing::scratch_dir("datasets");
  const auto d = gen_25gaussians(5000, 8);
  write_csv(dir / "d.csv", d.points);
  CHECK(read_csv(dir / "d.csv") == d.points);
  CHECK(parse_dataset("swissroll") == DatasetKind::Swissroll2D);
  CHECK_THROWS_AS(parse_dataset("moons"), ConfigError);
}
