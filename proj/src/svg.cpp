// Copyright (c) 2026, The dgflow authors
// SPDX-License-Identifier: Apache-2.0

#include "dgflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dgflow/errors.hpp"

namespace dgflow::svg {

namespace {

// Fixed 2-decimal coordinates keep files small and byte-stable.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  return out;
}

void check_bounds(const Bounds& b) {
  if (!(b.x1 > b.x0) || !(b.y1 > b.y0)) throw ConfigError("empty plot bounds");
}

}  // namespace

void write_scatter_panels(const std::filesystem::path& path, const std::vector<Panel>& panels,
                          const Bounds& b, int columns, int size) {
  check_bounds(b);
  if (panels.empty() || columns < 1 || size < 16) throw ConfigError("nothing to plot");
  const int title_h = 22;
  const int cols = std::min<int>(columns, static_cast<int>(panels.size()));
  const int rows = (static_cast<int>(panels.size()) + cols - 1) / cols;
  const int width = cols * size;
  const int height = rows * (size + title_h);
  auto out = open(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const int ox = static_cast<int>(p) % cols * size;
    const int oy = static_cast<int>(p) / cols * (size + title_h);
    out << "<g>\n<text x=\"" << ox + size / 2 << "\" y=\"" << oy + 16
        << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">"
        << escape(panels[p].title) << "</text>\n";
    out << "<rect x=\"" << ox + 1 << "\" y=\"" << oy + title_h << "\" width=\"" << size - 2
        << "\" height=\"" << size - 2 << "\" fill=\"none\" stroke=\"#999\"/>\n";
    for (const auto& layer : panels[p].layers) {
      if (layer.points.rows() > 0 && layer.points.cols() != 2)
        throw ConfigError("scatter layers need two columns");
      out << "<g fill=\"" << layer.color << "\" fill-opacity=\"" << num(layer.opacity) << "\">\n";
      for (Eigen::Index i = 0; i < layer.points.rows(); ++i) {
        const double x = layer.points(i, 0);
        const double y = layer.points(i, 1);
        if (!(x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1)) continue;
        const double px = ox + (x - b.x0) / (b.x1 - b.x0) * size;
        const double py = oy + title_h + (b.y1 - y) / (b.y1 - b.y0) * size;
        out << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py) << "\" r=\""
            << num(layer.radius) << "\"/>\n";
      }
      out << "</g>\n";
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
}

void write_vector_field(const std::filesystem::path& path, const Matrix& origins,
                        const Matrix& vectors, const Bounds& b, double max_len, int size) {
  check_bounds(b);
  if (origins.cols() != 2 || vectors.cols() != 2 || origins.rows() != vectors.rows())
    throw ConfigError("vector field needs matching n x 2 origins and vectors");
  double longest = 0.0;
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) longest = std::max(longest, vectors.row(i).norm());
  const double scale = longest > 0.0 ? max_len * (b.x1 - b.x0) / longest : 0.0;
  auto px = [&](double x) { return (x - b.x0) / (b.x1 - b.x0) * size; };
  auto py = [&](double y) { return (b.y1 - y) / (b.y1 - b.y0) * size; };
  auto out = open(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g stroke=\"" << kBaseColor << "\" stroke-width=\"1\" fill=\"" << kBaseColor << "\">\n";
  for (Eigen::Index i = 0; i < origins.rows(); ++i) {
    const double x = origins(i, 0);
    const double y = origins(i, 1);
    const double ex = x + scale * vectors(i, 0);
    const double ey = y + scale * vectors(i, 1);
    out << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(px(ex))
        << "\" y2=\"" << num(py(ey)) << "\"/>";
    out << "<circle cx=\"" << num(px(ex)) << "\" cy=\"" << num(py(ey)) << "\" r=\"1.2\"/>\n";
  }
  out << "</g>\n</svg>\n";
}

}  // namespace dgflow::svg
