#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace ghostpixel {

// Images are stored row-major so that a flattened image matches the raster
// order used to reshape Hadamard rows into patterns.
template <class S>
using Image = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using ImageD = Image<double>;
using ImageI = Image<int>;
using VectorD = Vector<double>;

template <class S>
Eigen::Map<const Vector<S>> flat(const Image<S>& img) {
  return {img.data(), img.size()};
}
template <class S>
Eigen::Map<Vector<S>> flat(Image<S>& img) {
  return {img.data(), img.size()};
}

inline ImageD as_image(const VectorD& v, Eigen::Index n) {
  return Eigen::Map<const ImageD>(v.data(), n, n);
}

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Dimension or length violations (non-power-of-two, mismatched shapes).
struct SizeError : Error {
  using Error::Error;
};
/// Parameter values outside their mathematical domain.
struct DomainError : Error {
  using Error::Error;
};
/// Quantities that are undefined for the given data (zero variance etc).
struct DegenerateError : Error {
  using Error::Error;
};
/// Malformed or unreadable files.
struct FormatError : Error {
  using Error::Error;
};

/// Gaussian FWHM = kFwhmPerSigma * sigma.
inline constexpr double kFwhmPerSigma = 2.3548;

constexpr bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline int log2_exact(std::size_t n) {
  int k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, index, counter), so exposures can be simulated in any
/// order or on any thread with identical results.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Random streams used across the simulator.
enum class Stream : std::uint64_t { noise = 1, jitter = 2, speckle = 3 };

/// Worker count from GHOSTPIXEL_THREADS (unset or invalid: hardware concurrency).
int thread_count();

/// Runs body(i) for i in [0, count) over at most `threads` workers using a
/// static block partition. body must only write to slot i of its outputs.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace ghostpixel
