#include "ghostpixel/hadamard.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ghostpixel {

ImageI sylvester(int k) {
  if (k < 0 || k > 13) throw SizeError("sylvester: order k=" + std::to_string(k) + " outside [0, 13]");
  const Eigen::Index n = Eigen::Index{1} << k;
  ImageI h(n, n);
  h(0, 0) = 1;
  for (Eigen::Index m = 1; m < n; m <<= 1) {
    h.block(0, m, m, m) = h.block(0, 0, m, m);
    h.block(m, 0, m, m) = h.block(0, 0, m, m);
    h.block(m, m, m, m) = -h.block(0, 0, m, m);
  }
  return h;
}

std::string to_string(Ordering o) {
  switch (o) {
    case Ordering::natural: return "natural";
    case Ordering::sequency: return "sequency";
    case Ordering::connectivity_ascending: return "connectivity-ascending";
  }
  return "natural";
}

Ordering parse_ordering(std::string_view s) {
  if (s == "natural") return Ordering::natural;
  if (s == "sequency") return Ordering::sequency;
  if (s == "connectivity-ascending" || s == "connectivity") return Ordering::connectivity_ascending;
  throw DomainError("unknown ordering '" + std::string(s) + "'");
}

std::size_t sign_changes(std::size_t index, std::size_t N) {
  std::size_t changes = 0;
  for (std::size_t j = 1; j < N; ++j) changes += hadamard_entry(index, j) != hadamard_entry(index, j - 1);
  return changes;
}

std::size_t pattern_transitions(std::size_t index, Eigen::Index n) {
  const auto side = static_cast<std::size_t>(n);
  std::size_t transitions = 0;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const int v = hadamard_entry(index, r * side + c);
      if (c + 1 < side) transitions += v != hadamard_entry(index, r * side + c + 1);
      if (r + 1 < side) transitions += v != hadamard_entry(index, (r + 1) * side + c);
    }
  }
  return transitions;
}

std::vector<std::size_t> order_basis(const HadamardBasis& basis, Ordering strategy) {
  if (basis.order_log2 < 0 || basis.order_log2 > kMaxBasisOrder)
    throw SizeError("basis order k=" + std::to_string(basis.order_log2) + " outside [0, " +
                    std::to_string(kMaxBasisOrder) + "]");
  const std::size_t N = basis.size();
  std::vector<std::size_t> perm(N);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (strategy == Ordering::natural) return perm;

  std::vector<std::size_t> key(N);
  for (std::size_t i = 0; i < N; ++i)
    key[i] = strategy == Ordering::sequency ? sign_changes(i, N) : pattern_transitions(i, basis.side());
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  return perm;
}

HadamardBasis make_basis(int order_log2, Ordering ordering) {
  HadamardBasis basis{order_log2, ordering, {}};
  basis.permutation = order_basis(basis, ordering);
  return basis;
}

std::size_t compressed_count(std::size_t N, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw DomainError("sampling rate must lie in (0, 1]");
  const auto m = static_cast<std::size_t>(std::floor(rate * static_cast<double>(N) + 0.5));
  return std::clamp<std::size_t>(m, 1, N);
}

std::vector<std::size_t> compress(std::span<const std::size_t> permutation, double rate) {
  const std::size_t m = compressed_count(permutation.size(), rate);
  return {permutation.begin(), permutation.begin() + static_cast<std::ptrdiff_t>(m)};
}

ImageD signed_pattern(const HadamardBasis& basis, std::size_t index) {
  const std::size_t N = basis.size();
  if (index >= N) throw SizeError("pattern index " + std::to_string(index) + " out of range");
  const Eigen::Index n = basis.side();
  ImageD p(n, n);
  for (std::size_t j = 0; j < N; ++j) p.data()[j] = hadamard_entry(index, j);
  return p;
}

PatternPair make_pattern_pair(const HadamardBasis& basis, std::size_t index, Eigen::Index n) {
  if (n * n != static_cast<Eigen::Index>(basis.size()))
    throw SizeError("pattern side " + std::to_string(n) + " does not match basis size " +
                    std::to_string(basis.size()));
  const ImageD h = signed_pattern(basis, index);
  PatternPair pair;
  pair.positive = (h.array() + 1.0) / 2.0;
  pair.negative = (1.0 - h.array()) / 2.0;
  return pair;
}

}  // namespace ghostpixel
