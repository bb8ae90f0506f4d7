#pragma once

#include "ghostpixel/core.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ghostpixel {

/// Detail bands of one decomposition level.
template <class S>
struct DetailBands {
  Image<S> horizontal;  // (a - b + c - d) / 2
  Image<S> vertical;    // (a + b - c - d) / 2
  Image<S> diagonal;    // (a - b - c + d) / 2
};

/// Orthonormal multi-level Haar decomposition. details[0] is the finest level.
template <class S>
struct WaveletPyramid {
  int levels = 0;
  Image<S> approx;
  std::vector<DetailBands<S>> details;

  Eigen::Index coefficient_count() const {
    Eigen::Index total = approx.size();
    for (const auto& d : details) total += d.horizontal.size() + d.vertical.size() + d.diagonal.size();
    return total;
  }

  S energy() const {
    S total = approx.squaredNorm();
    for (const auto& d : details)
      total += d.horizontal.squaredNorm() + d.vertical.squaredNorm() + d.diagonal.squaredNorm();
    return total;
  }

  S detail_l1() const {
    S total(0);
    for (const auto& d : details)
      total += d.horizontal.cwiseAbs().sum() + d.vertical.cwiseAbs().sum() + d.diagonal.cwiseAbs().sum();
    return total;
  }
};

template <class S>
WaveletPyramid<S> dwt2(const Image<S>& image, int levels) {
  if (levels < 1) throw DomainError("dwt2: levels must be >= 1");
  const Eigen::Index block = Eigen::Index{1} << levels;
  if (image.rows() == 0 || image.rows() % block != 0 || image.cols() % block != 0)
    throw SizeError("dwt2: image " + std::to_string(image.rows()) + "x" + std::to_string(image.cols()) +
                    " not divisible by 2^" + std::to_string(levels));
  WaveletPyramid<S> out;
  out.levels = levels;
  Image<S> current = image;
  for (int level = 0; level < levels; ++level) {
    const Eigen::Index rows = current.rows() / 2;
    const Eigen::Index cols = current.cols() / 2;
    Image<S> approx(rows, cols);
    DetailBands<S> bands{Image<S>(rows, cols), Image<S>(rows, cols), Image<S>(rows, cols)};
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        const S a = current(2 * i, 2 * j);
        const S b = current(2 * i, 2 * j + 1);
        const S c = current(2 * i + 1, 2 * j);
        const S d = current(2 * i + 1, 2 * j + 1);
        approx(i, j) = (a + b + c + d) / S(2);
        bands.horizontal(i, j) = (a - b + c - d) / S(2);
        bands.vertical(i, j) = (a + b - c - d) / S(2);
        bands.diagonal(i, j) = (a - b - c + d) / S(2);
      }
    }
    out.details.push_back(std::move(bands));
    current = std::move(approx);
  }
  out.approx = std::move(current);
  return out;
}

template <class S>
Image<S> idwt2(const WaveletPyramid<S>& pyramid) {
  if (pyramid.levels < 1 || static_cast<int>(pyramid.details.size()) != pyramid.levels)
    throw SizeError("idwt2: pyramid level count inconsistent");
  Image<S> current = pyramid.approx;
  for (int level = pyramid.levels - 1; level >= 0; --level) {
    const auto& bands = pyramid.details[static_cast<std::size_t>(level)];
    const Eigen::Index rows = current.rows();
    const Eigen::Index cols = current.cols();
    for (const auto* band : {&bands.horizontal, &bands.vertical, &bands.diagonal})
      if (band->rows() != rows || band->cols() != cols) throw SizeError("idwt2: band dimensions inconsistent");
    Image<S> up(2 * rows, 2 * cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        const S s = current(i, j);
        const S h = bands.horizontal(i, j);
        const S v = bands.vertical(i, j);
        const S d = bands.diagonal(i, j);
        up(2 * i, 2 * j) = (s + h + v + d) / S(2);
        up(2 * i, 2 * j + 1) = (s - h + v - d) / S(2);
        up(2 * i + 1, 2 * j) = (s + h - v - d) / S(2);
        up(2 * i + 1, 2 * j + 1) = (s - h - v + d) / S(2);
      }
    }
    current = std::move(up);
  }
  return current;
}

/// Soft shrinkage of every detail coefficient; the approximation band is kept.
template <class S>
WaveletPyramid<S> soft_threshold(WaveletPyramid<S> pyramid, S lambda) {
  if (!(lambda >= S(0))) throw DomainError("soft_threshold: lambda must be non-negative");
  const auto shrink = [lambda](Image<S>& band) {
    band = band.unaryExpr([lambda](S c) { return std::copysign(std::max(std::abs(c) - lambda, S(0)), c); });
  };
  for (auto& bands : pyramid.details) {
    shrink(bands.horizontal);
    shrink(bands.vertical);
    shrink(bands.diagonal);
  }
  return pyramid;
}

}  // namespace ghostpixel
