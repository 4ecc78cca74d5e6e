#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "nncert/dataset.hpp"
#include "nncert/error.hpp"

namespace nncert {

using FeatureVector = std::vector<double>;

/// Pixel intensities scaled to [0,1], channel-planar row-major.
inline FeatureVector flatten_raw(const Image& image) {
  FeatureVector out(image.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = image.pixels[i] / 255.0;
  return out;
}

struct HogParams {
  int orientations = 9;   // bins over [0,180) degrees, bin i centred at i*180/orientations
  int cell_side = 7;      // pixels
  int block_side = 2;     // cells
  int block_stride = 1;   // cells
  double clip = 0.2;      // L2-Hys clipping threshold

  static HogParams mnist() { return {}; }
  static HogParams cifar10() {
    HogParams p;
    p.cell_side = 8;
    return p;
  }
};

struct HogLayout {
  int cells_x = 0;
  int cells_y = 0;
  int blocks_x = 0;
  int blocks_y = 0;
  std::size_t block_dim = 0;

  std::size_t dim() const { return static_cast<std::size_t>(blocks_x) * blocks_y * block_dim; }
};

/// Cell and block grid for a `width` x `height` image; pixels beyond the last
/// whole cell are cropped.
inline HogLayout hog_layout(int width, int height, const HogParams& p) {
  if (p.orientations < 1 || p.cell_side < 1 || p.block_side < 1 || p.block_stride < 1 || !(p.clip > 0))
    throw Error(ErrorCode::invalid_argument, "invalid HOG parameters");
  if (width < 2 * p.cell_side || height < 2 * p.cell_side)
    throw Error(ErrorCode::image_too_small,
                "image " + std::to_string(width) + "x" + std::to_string(height) +
                    " smaller than two cells of side " + std::to_string(p.cell_side));
  HogLayout l;
  l.cells_x = width / p.cell_side;
  l.cells_y = height / p.cell_side;
  if (l.cells_x < p.block_side || l.cells_y < p.block_side)
    throw Error(ErrorCode::image_too_small, "fewer cells than one block of side " + std::to_string(p.block_side));
  l.blocks_x = (l.cells_x - p.block_side) / p.block_stride + 1;
  l.blocks_y = (l.cells_y - p.block_side) / p.block_stride + 1;
  l.block_dim = static_cast<std::size_t>(p.block_side) * p.block_side * p.orientations;
  return l;
}

namespace detail {

inline std::vector<double> to_gray(const Image& image) {
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  std::vector<double> gray(n);
  if (image.channels == 1) {
    for (std::size_t i = 0; i < n; ++i) gray[i] = image.pixels[i];
  } else {
    for (std::size_t i = 0; i < n; ++i)
      gray[i] = 0.299 * image.pixels[i] + 0.587 * image.pixels[n + i] + 0.114 * image.pixels[2 * n + i];
  }
  return gray;
}

}  // namespace detail

/// Histogram of oriented gradients on a grayscale intensity grid (row-major,
/// `width` x `height`).
///
/// Centered [-1,0,1] differences with edge replication, unsigned orientation
/// with magnitude-weighted linear interpolation between the two nearest bin
/// centres, per-cell histograms without spatial interpolation, and L2-Hys
/// block normalisation. Blocks are emitted row-major; inside a block, cells
/// row-major then orientation bins.
inline FeatureVector hog_gray(const std::vector<double>& gray, int width, int height, const HogParams& p) {
  const HogLayout layout = hog_layout(width, height, p);
  const int nb = p.orientations;
  const double bin_width = 180.0 / nb;

  std::vector<double> cells(static_cast<std::size_t>(layout.cells_x) * layout.cells_y * nb, 0.0);
  auto px = [&](int r, int c) {
    r = std::clamp(r, 0, height - 1);
    c = std::clamp(c, 0, width - 1);
    return gray[static_cast<std::size_t>(r) * width + c];
  };

  const int used_h = layout.cells_y * p.cell_side;
  const int used_w = layout.cells_x * p.cell_side;
  for (int r = 0; r < used_h; ++r) {
    for (int c = 0; c < used_w; ++c) {
      const double gx = px(r, c + 1) - px(r, c - 1);
      const double gy = px(r + 1, c) - px(r - 1, c);
      if (gx == 0.0 && gy == 0.0) continue;
      const double mag = std::sqrt(gx * gx + gy * gy);
      double angle = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      const double pos = angle / bin_width;
      int lo = static_cast<int>(std::floor(pos));
      const double frac = pos - lo;
      lo %= nb;
      const int hi = (lo + 1) % nb;
      double* hist = &cells[(static_cast<std::size_t>(r / p.cell_side) * layout.cells_x + c / p.cell_side) * nb];
      hist[lo] += mag * (1.0 - frac);
      hist[hi] += mag * frac;
    }
  }

  constexpr double eps = 1e-5;
  FeatureVector out;
  out.reserve(layout.dim());
  std::vector<double> block(layout.block_dim);
  for (int by = 0; by < layout.blocks_y; ++by) {
    for (int bx = 0; bx < layout.blocks_x; ++bx) {
      std::size_t k = 0;
      for (int cy = 0; cy < p.block_side; ++cy) {
        for (int cx = 0; cx < p.block_side; ++cx) {
          const int cell_y = by * p.block_stride + cy;
          const int cell_x = bx * p.block_stride + cx;
          const double* hist = &cells[(static_cast<std::size_t>(cell_y) * layout.cells_x + cell_x) * nb];
          for (int o = 0; o < nb; ++o) block[k++] = hist[o];
        }
      }
      double ss = 0.0;
      for (double v : block) ss += v * v;
      double norm = std::sqrt(ss + eps * eps);
      for (double& v : block) v = std::min(v / norm, p.clip);
      ss = 0.0;
      for (double v : block) ss += v * v;
      norm = std::sqrt(ss + eps * eps);
      for (double v : block) out.push_back(v / norm);
    }
  }
  return out;
}

/// HOG of an image; 3-channel input is converted to luma first.
inline FeatureVector hog(const Image& image, const HogParams& params = {}) {
  return hog_gray(detail::to_gray(image), image.width, image.height, params);
}

}  // namespace nncert
