// Copyright 2026 The HTD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Latent heatmaps: a grayscale PGM raster with per-frame min-max scaling and
// a CSV of the raw values. The latent fills the grid row-major.

#ifndef HTD_EVAL_HEATMAP_HPP_
#define HTD_EVAL_HEATMAP_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "htd/data/io.hpp"

namespace htd::eval {

struct HeatmapGrid {
  int rows = 8;
  int cols = 8;

  /// Squarest grid with rows * cols == n, rows <= cols.
  static HeatmapGrid for_size(int n) {
    if (n < 1) throw std::invalid_argument("heatmap grid needs a positive size");
    int r = static_cast<int>(std::sqrt(static_cast<double>(n)));
    while (n % r != 0) --r;
    return {r, n / r};
  }
};

/// Per-frame min-max scaling to [0, 1]. A constant frame maps to 0.5.
inline std::vector<float> normalize_frame(std::span<const float> latent) {
  std::vector<float> out(latent.size(), 0.5f);
  if (latent.empty()) return out;
  const auto [lo, hi] = std::minmax_element(latent.begin(), latent.end());
  const float range = *hi - *lo;
  if (!(range > 0)) return out;
  for (std::size_t i = 0; i < latent.size(); ++i) out[i] = (latent[i] - *lo) / range;
  return out;
}

/// 8-bit gray levels of the normalized frame.
inline std::vector<std::uint8_t> raster_levels(std::span<const float> latent) {
  const auto n = normalize_frame(latent);
  std::vector<std::uint8_t> px(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) px[i] = static_cast<std::uint8_t>(std::lround(n[i] * 255.0f));
  return px;
}

struct HeatmapFiles {
  std::filesystem::path raster;
  std::filesystem::path csv;
};

/// Writes <stem>.pgm and <stem>.csv. Each grid cell becomes a
/// cell_pixels x cell_pixels block in the raster.
inline HeatmapFiles export_latent_heatmap(std::span<const float> latent, HeatmapGrid grid,
                                          const std::filesystem::path& stem, int cell_pixels = 1) {
  if (static_cast<int>(latent.size()) != grid.rows * grid.cols)
    throw std::invalid_argument("latent of size " + std::to_string(latent.size()) + " does not fill a " +
                                std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " grid");
  if (cell_pixels < 1) throw std::invalid_argument("cell_pixels must be positive");
  HeatmapFiles files{stem, stem};
  files.raster += ".pgm";
  files.csv += ".csv";

  const auto levels = raster_levels(latent);
  const int w = grid.cols * cell_pixels, h = grid.rows * cell_pixels;
  std::ofstream img(files.raster, std::ios::binary);
  if (!img) throw data::IoError("cannot write " + files.raster.string());
  img << "P5\n" << w << " " << h << "\n255\n";
  std::vector<char> row(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) row[x] = static_cast<char>(levels[(y / cell_pixels) * grid.cols + x / cell_pixels]);
    img.write(row.data(), w);
  }
  if (!img) throw data::IoError("failed writing " + files.raster.string());

  std::ofstream csv(files.csv);
  if (!csv) throw data::IoError("cannot write " + files.csv.string());
  char buf[32];
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(latent[r * grid.cols + c]));
      csv << (c ? "," : "") << buf;
    }
    csv << "\n";
  }
  if (!csv) throw data::IoError("failed writing " + files.csv.string());
  return files;
}

/// Reads a heatmap CSV back as a flat row-major vector.
inline std::vector<float> read_heatmap_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data::IoError("cannot read " + path.string());
  std::vector<float> out;
  std::string line, cell;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) out.push_back(std::stof(cell));
  }
  return out;
}

struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

inline PgmImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int maxval = 0;
  PgmImage img;
  if (!(in >> magic >> img.width >> img.height >> maxval) || magic != "P5" || maxval != 255)
    throw data::IoError("not an 8-bit binary PGM: " + path.string());
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw data::IoError("truncated PGM: " + path.string());
  return img;
}

}  // namespace htd::eval

#endif  // HTD_EVAL_HEATMAP_HPP_
