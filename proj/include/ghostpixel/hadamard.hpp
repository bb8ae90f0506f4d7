#pragma once

#include "ghostpixel/core.hpp"

#include <bit>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ghostpixel {

/// Dense Sylvester Hadamard matrix of order 2^k, k <= 13.
/// H[i][j] = (-1)^popcount(i & j), so row 0 and column 0 are all ones.
ImageI sylvester(int k);

/// Entry (i, j) of the Sylvester matrix of any order containing i and j.
inline int hadamard_entry(std::size_t i, std::size_t j) {
  return (std::popcount(i & j) & 1) ? -1 : 1;
}

/// In-place unnormalized fast Walsh-Hadamard transform (natural order).
template <class Derived>
void fwht_inplace(Eigen::MatrixBase<Derived>& v) {
  const auto n = static_cast<std::size_t>(v.size());
  if (!is_pow2(n)) throw SizeError("fwht: length " + std::to_string(n) + " is not a power of two");
  auto* data = v.derived().data();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const auto a = data[j];
        const auto b = data[j + h];
        data[j] = a + b;
        data[j + h] = a - b;
      }
    }
  }
}

/// H_N * v for the Sylvester matrix of size N = v.size(). Applying it twice
/// scales by N.
template <class Derived>
Vector<typename Derived::Scalar> fwht(const Eigen::MatrixBase<Derived>& v) {
  Vector<typename Derived::Scalar> out = v;
  fwht_inplace(out);
  return out;
}

enum class Ordering { natural, sequency, connectivity_ascending };

std::string to_string(Ordering o);
/// Accepts "natural", "sequency", "connectivity-ascending" and "connectivity".
Ordering parse_ordering(std::string_view s);

/// Hadamard basis for a 2^k x 2^k image grid: N = 4^k rows of H_N, each
/// reshaped row-major into an n x n pattern, visited in `permutation` order.
struct HadamardBasis {
  int order_log2 = 0;
  Ordering ordering = Ordering::natural;
  std::vector<std::size_t> permutation;

  Eigen::Index side() const { return Eigen::Index{1} << order_log2; }
  std::size_t size() const { return std::size_t{1} << (2 * order_log2); }
};

inline constexpr int kMaxBasisOrder = 7;

/// Sign changes along the length-N row `index` of H_N.
std::size_t sign_changes(std::size_t index, std::size_t N);

/// 0<->1 transitions along rows and columns of the n x n pattern of row `index`.
std::size_t pattern_transitions(std::size_t index, Eigen::Index n);

/// Permutation of the basis rows for the given strategy. Ties are broken by
/// natural index.
std::vector<std::size_t> order_basis(const HadamardBasis& basis, Ordering strategy);

HadamardBasis make_basis(int order_log2, Ordering ordering);

/// Number of measurements kept at a sampling rate: round-half-up of rate*N, at least 1.
std::size_t compressed_count(std::size_t N, double rate);

/// First round(rate * N) entries of the permutation.
std::vector<std::size_t> compress(std::span<const std::size_t> permutation, double rate);

/// Row `index` of H_N reshaped to n x n, entries +1/-1.
ImageD signed_pattern(const HadamardBasis& basis, std::size_t index);

/// Binary realization of a +-1 pattern: positive = (J + h)/2, negative = (J - h)/2.
struct PatternPair {
  ImageD positive;
  ImageD negative;
};

PatternPair make_pattern_pair(const HadamardBasis& basis, std::size_t index, Eigen::Index n);

}  // namespace ghostpixel
