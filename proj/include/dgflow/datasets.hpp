// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>

#include "dgflow/mlp.hpp"

namespace dgflow::data {

using nn::Matrix;

enum class DatasetKind { Gaussians25, Swissroll2D };

std::string to_string(DatasetKind kind);
/// Accepts "25gaussians" and "swissroll" (case-sensitive).
DatasetKind parse_dataset(const std::string& name);

struct Dataset2D {
  Matrix points;  // n x 2, normalized
  DatasetKind kind = DatasetKind::Gaussians25;
  double normalization = 1.0;
};

/// Divisor applied to raw 25-Gaussians coordinates.
inline const double kGaussiansScale = 2.0 * std::numbers::sqrt2;
/// Divisor applied to raw swissroll coordinates.
inline constexpr double kSwissrollScale = 7.5;
/// Per-mode standard deviation of the 25-Gaussians mixture before scaling.
inline constexpr double kRawModeStd = 0.05;

/// The 25 normalized mode centres, index k = 5 * i + j for raw centre
/// (-4 + 2i, -4 + 2j).
struct ModeTable {
  std::array<std::array<double, 2>, 25> centers{};
  double std = 0.0;

  static ModeTable gaussians25();
};

struct NearestMode {
  int index = 0;
  double distance = 0.0;
};

/// Exhaustive scan; ties go to the lowest index.
NearestMode nearest_mode(const ModeTable& modes, double x, double y);

Dataset2D gen_25gaussians(std::size_t n, std::uint64_t seed);

/// Swiss roll with 3D Gaussian noise of std 0.25, coordinates (0, 2) kept.
Dataset2D gen_swissroll(std::size_t n, std::uint64_t seed);

/// Noise-free swiss-roll point for parameter r in [0, 1], already normalized.
std::array<double, 2> swissroll_point(double r);

Dataset2D generate(DatasetKind kind, std::size_t n, std::uint64_t seed);

/// Writes `x0,x1` header and one row per point with 17 significant digits.
void write_csv(const std::filesystem::path& path, const Matrix& points);
/// Reads a two-column CSV written by write_csv. Throws ConfigError on
/// malformed input.
Matrix read_csv(const std::filesystem::path& path);

}  // namespace dgflow::data
