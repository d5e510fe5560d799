// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dgflow/mlp.hpp"

namespace dgflow::svg {

using nn::Matrix;

inline constexpr const char* kBaseColor = "#1f4fb4";     // blue
inline constexpr const char* kRefinedColor = "#d62728";  // red
inline constexpr const char* kRealColor = "#8c564b";     // brown

struct Bounds {
  double x0 = -1.5, x1 = 1.5, y0 = -1.5, y1 = 1.5;
};

struct PointLayer {
  Matrix points;  // n x 2
  std::string color;
  double radius = 1.0;
  double opacity = 0.5;
};

struct Panel {
  std::string title;
  std::vector<PointLayer> layers;
};

/// Panels laid out left to right, `columns` per row, each a square of `size` px.
void write_scatter_panels(const std::filesystem::path& path, const std::vector<Panel>& panels,
                          const Bounds& bounds, int columns = 3, int size = 320);

/// Arrows from each row of `origins` along the matching row of `vectors`,
/// scaled so the longest arrow spans `max_len` of the plot width.
void write_vector_field(const std::filesystem::path& path, const Matrix& origins,
                        const Matrix& vectors, const Bounds& bounds, double max_len = 0.06,
                        int size = 480);

}  // namespace dgflow::svg
