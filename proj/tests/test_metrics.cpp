// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dgflow/datasets.hpp"
#include "dgflow/errors.hpp"
#include "dgflow/metrics.hpp"
#include "support.hpp"

using namespace dgflow;
using nn::Matrix;

namespace {

// Direct double loop without log-sum-exp shifting, in long double.
double naive_kde(const Matrix& gen, const Matrix& ref, double h) {
  long double total = 0.0L;
  for (Eigen::Index r = 0; r < ref.rows(); ++r) {
    long double p = 0.0L;
    for (Eigen::Index i = 0; i < gen.rows(); ++i) {
      const long double dx = gen(i, 0) - ref(r, 0);
      const long double dy = gen(i, 1) - ref(r, 1);
      p += std::exp(-(dx * dx + dy * dy) / (2.0L * h * h)) / (2.0L * std::numbers::pi_v<long double> * h * h);
    }
    total += std::log(p / gen.rows());
  }
  return static_cast<double>(total);
}

Matrix centers_matrix(const data::ModeTable& modes) {
  Matrix m(25, 2);
  for (int k = 0; k < 25; ++k) m.row(k) << modes.centers[k][0], modes.centers[k][1];
  return m;
}

}  // namespace

TEST_CASE("pct_high_quality examples") {
  const auto modes = data::ModeTable::gaussians25();
  CHECK(4.0 * modes.std == doctest::Approx(0.070711).epsilon(1e-5));
  CHECK(metrics::pct_high_quality(centers_matrix(modes), modes) == 100.0);
  Matrix off(1, 2);
  off << modes.centers[12][0] + 0.1, modes.centers[12][1];
  CHECK(metrics::pct_high_quality(off, modes) == 0.0);
  CHECK_THROWS_AS(metrics::pct_high_quality(Matrix(0, 2), modes), ConfigError);
}

TEST_CASE("pct_high_quality on true samples and under contraction") {
  const auto modes = data::ModeTable::gaussians25();
  const Matrix x = data::gen_25gaussians(1'000'000, 11).points;
  const double hq = metrics::pct_high_quality(x, modes);
  // P(chi2_2 <= 16) = 1 - e^-8.
  CHECK(hq >= 99.8);
  CHECK(hq <= 100.0);
  CHECK(hq == doctest::Approx(100.0 * (1.0 - std::exp(-8.0))).epsilon(2e-4));

  const Matrix noisy = data::gen_25gaussians(2000, 1).points * 1.1;
  Matrix pulled = noisy;
  for (Eigen::Index i = 0; i < noisy.rows(); ++i) {
    const auto nm = data::nearest_mode(modes, noisy(i, 0), noisy(i, 1));
    const Eigen::RowVector2d c(modes.centers[nm.index][0], modes.centers[nm.index][1]);
    pulled.row(i) = c + 0.7 * (noisy.row(i) - c);
  }
  CHECK(metrics::pct_high_quality(pulled, modes) >= metrics::pct_high_quality(noisy, modes));
}

TEST_CASE("kde_score closed forms") {
  Matrix p(1, 2);
  p << 0.3, -0.2;
  // log(1 / (2 pi 0.01)) = 2.7672931 (2.76700 is a rounding slip).
  CHECK(std::abs(metrics::kde_score(p, p) - 2.7672931) <= 1e-5);
  CHECK(metrics::kde_score(p, p) == doctest::Approx(-std::log(2.0 * std::numbers::pi * 0.01)).epsilon(1e-14));
  for (double d : {0.05, 0.3, 2.0}) {
    Matrix q(1, 2);
    q << 0.3 + d * 0.6, -0.2 + d * 0.8;
    CHECK(metrics::kde_score(p, q) ==
          doctest::Approx(-std::log(2.0 * std::numbers::pi * 0.01) - d * d / 0.02).epsilon(1e-12));
  }
  // Far away points underflow a naive sum but not log-sum-exp.
  Matrix far(1, 2);
  far << 30.0, 0.0;
  CHECK(std::isfinite(metrics::kde_score(p, far)));
  CHECK_THROWS_AS(metrics::kde_score(Matrix(0, 2), p), ConfigError);
}

TEST_CASE("kde_score matches a brute-force double loop and is order invariant") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix g = testing::random_matrix(200, 2, s, 0.5);
    const Matrix r = testing::random_matrix(50, 2, s + 100, 0.5);
    const double fast = metrics::kde_score(g, r);
    CHECK(std::abs(fast - naive_kde(g, r, 0.1)) <= 1e-9 * std::max(1.0, std::abs(fast)));
    CHECK(metrics::kde_score(g, r, 0.1, 4) == fast);
    std::vector<Eigen::Index> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(s);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix gp(200, 2);
    for (Eigen::Index i = 0; i < 200; ++i) gp.row(i) = g.row(perm[i]);
    const Matrix rp = r.colwise().reverse();
    CHECK(metrics::kde_score(gp, rp) == doctest::Approx(fast).epsilon(1e-12));
  }
}

TEST_CASE("KDE density integrates to one") {
  const Matrix g = testing::random_matrix(20, 2, 3, 0.5);
  const double step = 0.01;
  Matrix grid(1, 2);
  double mass = 0.0;
  for (double x = -2.0; x <= 2.0; x += step)
    for (double y = -2.0; y <= 2.0; y += step) {
      grid << x, y;
      mass += std::exp(metrics::kde_score(g, grid)) * step * step;
    }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("evaluate_run slices and summary") {
  const Matrix ref = data::gen_25gaussians(100, 2).points;
  Matrix fixed(40, 2);
  for (Eigen::Index i = 0; i < 40; ++i) fixed.row(i) = ref.row(i % 10);
  const auto s = metrics::evaluate_run(fixed, ref, 4, 10);
  REQUIRE(s.runs.size() == 4);
  CHECK(s.pct_hq_std == 0.0);
  CHECK(s.kde_std == 0.0);
  CHECK(s.kde_mean == doctest::Approx(metrics::kde_score(fixed.topRows(10), ref)));

  const Matrix x = data::gen_25gaussians(30, 9).points;
  const auto t = metrics::evaluate_run(x, ref, 3, 10);
  for (int r = 0; r < 3; ++r)
    CHECK(t.runs[r].kde_score == metrics::kde_score(x.middleRows(10 * r, 10), ref));
  CHECK_THROWS_AS(metrics::evaluate_run(x, ref, 4, 10), ConfigError);
  const auto j = t.to_json();
  CHECK(j["runs"].size() == 3);
  CHECK(j["pct_high_quality"]["mean"].get<double>() == t.pct_hq_mean);

  const auto path = testing::scratch_dir("metrics") / "results_table.csv";
  metrics::write_results_table(path, {{"base", s}, {"dgflow-kl", t}});
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "method,pct_hq_mean,pct_hq_std,kde_mean,kde_std");
  std::getline(in, row);
  CHECK(row.rfind("base,", 0) == 0);
  std::getline(in, row);
  CHECK(row.rfind("dgflow-kl,", 0) == 0);
}
