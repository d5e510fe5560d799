// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the unit tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dgflow/mlp.hpp"

namespace testing {

using dgflow::nn::Matrix;

/// |a - b| <= rel * max(|a|, |b|) + abs
inline bool close(double a, double b, double rel, double abs = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                            double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

/// Visits every weight and bias entry of `net` by reference.
inline void for_each_param(dgflow::nn::Mlp& net,
                           const std::function<void(std::size_t layer, bool is_bias,
                                                    Eigen::Index r, Eigen::Index c,
                                                    double& p)>& fn) {
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto& l = net.layers[k];
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) fn(k, false, r, c, l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) fn(k, true, r, 0, l.bias(r));
  }
}

/// Central difference of `f` with respect to `p` (restored afterwards).
inline double central_diff(double& p, double h, const std::function<double()>& f) {
  const double saved = p;
  p = saved + h;
  const double up = f();
  p = saved - h;
  const double down = f();
  p = saved;
  return (up - down) / (2.0 * h);
}

/// A fresh scratch directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dgflow_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
