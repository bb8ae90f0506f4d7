#pragma once

// Test-only generators and brute-force oracles. Nothing here calls into the
// library's fast paths.

#include "ghostpixel/core.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace test {

using ghostpixel::ImageD;
using ghostpixel::ImageI;
using ghostpixel::VectorD;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  VectorD vector(Eigen::Index n) {
    VectorD v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  ImageD image(Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
    ImageD img(rows, cols);
    for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = uniform(lo, hi);
    return img;
  }

  ImageD binary_image(Eigen::Index n) {
    ImageD img(n, n);
    for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = uniform() < 0.5 ? 0.0 : 1.0;
    return img;
  }

  /// Piecewise-constant image: background plus a few axis-aligned rectangles
  /// at arbitrary offsets with gray levels in [0, 1].
  ImageD blocks(Eigen::Index n, int count) {
    ImageD img = ImageD::Constant(n, n, uniform(0.0, 0.3));
    for (int b = 0; b < count; ++b) {
      const int r0 = integer(0, static_cast<int>(n) - 4);
      const int c0 = integer(0, static_cast<int>(n) - 4);
      const int h = integer(3, static_cast<int>(n) - r0);
      const int w = integer(3, static_cast<int>(n) - c0);
      img.block(r0, c0, h, w).setConstant(uniform(0.3, 1.0));
    }
    return img;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Dense N x N Hadamard matrix from the bit-parity formula.
inline Eigen::MatrixXd dense_hadamard(std::size_t N) {
  Eigen::MatrixXd H(N, N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) H(i, j) = (std::popcount(i & j) % 2) ? -1.0 : 1.0;
  return H;
}

/// Direct 2D correlation with a truncated, renormalized Gaussian; samples
/// outside the image take the value `pad`.
inline ImageD loop_gaussian(const ImageD& img, double sigma, double pad) {
  if (sigma == 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w;
  double total = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    w.push_back(std::exp(-0.5 * d * d / (sigma * sigma)));
    total += w.back();
  }
  for (double& x : w) x /= total;
  ImageD out(img.rows(), img.cols());
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      double acc = 0.0;
      for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
          const Eigen::Index rr = r + dr, cc = c + dc;
          const bool inside = rr >= 0 && rr < img.rows() && cc >= 0 && cc < img.cols();
          acc += w[dr + radius] * w[dc + radius] * (inside ? img(rr, cc) : pad);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

inline double loop_product_sum(const ImageD& a, const ImageD& b) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) s += a(r, c) * b(r, c);
  return s;
}

inline double relative_error(const ImageD& x, const ImageD& ref) { return (x - ref).norm() / ref.norm(); }

/// Affine fit of x to ref (least squares) and the resulting max abs deviation.
inline double affine_max_error(const ImageD& x, const ImageD& ref) {
  const double n = static_cast<double>(x.size());
  const double mx = x.sum() / n, mr = ref.sum() / n;
  const double sxx = (x.array() - mx).square().sum();
  const double sxr = ((x.array() - mx) * (ref.array() - mr)).sum();
  const double a = sxx == 0.0 ? 0.0 : sxr / sxx;
  return ((a * (x.array() - mx) + mr) - ref.array()).abs().maxCoeff();
}

/// trace[k] <= trace[k-1] + slack * max(1, |trace[k-1]|) for every k > first.
inline bool non_increasing_after(const std::vector<double>& trace, std::size_t first, double slack) {
  for (std::size_t k = first + 1; k < trace.size(); ++k)
    if (trace[k] > trace[k - 1] + slack * std::max(1.0, std::abs(trace[k - 1]))) return false;
  return true;
}

}  // namespace test
