#include "ghostpixel/phantoms.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

namespace ghostpixel {

namespace {

// 5x7 bitmap font, one string per row, '#' = set.
struct Glyph {
  char ch;
  std::array<const char*, 7> rows;
};

constexpr std::array<Glyph, 37> kFont{{
    {' ', {".....", ".....", ".....", ".....", ".....", ".....", "....."}},
    {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
    {'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
    {'D', {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."}},
    {'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
    {'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
    {'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####"}},
    {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
    {'I', {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
    {'J', {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
    {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
    {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
    {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
    {'N', {"#...#", "#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#"}},
    {'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
    {'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
    {'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
    {'S', {".####", "#....", "#....", ".###.", "....#", "....#", "####."}},
    {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
    {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
    {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
    {'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#."}},
    {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
    {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
    {'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
    {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
    {'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
    {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
    {'3', {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."}},
    {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
    {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
    {'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
    {'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
    {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
    {'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
}};

const Glyph& glyph(char ch) {
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (const auto& g : kFont)
    if (g.ch == up) return g;
  throw DomainError(std::string("letters phantom: no glyph for '") + ch + "'");
}

double param(const PhantomSpec& spec, const std::string& key, double fallback) {
  const auto it = spec.parameters.find(key);
  return it == spec.parameters.end() ? fallback : it->second;
}

ImageD letters(const PhantomSpec& spec) {
  const Eigen::Index n = spec.side;
  if (spec.text.empty()) throw DomainError("letters phantom: empty text");
  for (char ch : spec.text) glyph(ch);
  const double margin = param(spec, "margin", 1.0);
  const double avail = static_cast<double>(n) - 2.0 * margin;
  const auto columns = static_cast<double>(6 * spec.text.size() - 1);
  const double cell_w = avail / columns;
  const double cell_h = std::min(avail / 7.0, 2.0 * cell_w);
  if (cell_w <= 0.0) throw DomainError("letters phantom: margin leaves no room");
  const double x0 = margin;
  const double y0 = (static_cast<double>(n) - 7.0 * cell_h) / 2.0;

  ImageD img = ImageD::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double gy = (static_cast<double>(r) + 0.5 - y0) / cell_h;
      const double gx = (static_cast<double>(c) + 0.5 - x0) / cell_w;
      if (gy < 0.0 || gy >= 7.0 || gx < 0.0 || gx >= columns) continue;
      const auto col = static_cast<std::size_t>(gx);
      const std::size_t letter = col / 6;
      const std::size_t within = col % 6;
      if (within == 5) continue;
      if (glyph(spec.text[letter]).rows[static_cast<std::size_t>(gy)][within] == '#') img(r, c) = 1.0;
    }
  }
  return img;
}

ImageD gear(const PhantomSpec& spec) {
  const Eigen::Index n = spec.side;
  const double teeth = param(spec, "teeth", 14.0);
  const double radius = param(spec, "radius", 0.3 * static_cast<double>(n));
  const double height = param(spec, "tooth_height", 0.1 * static_cast<double>(n));
  if (teeth < 1.0 || teeth != std::floor(teeth)) throw DomainError("gear: teeth must be a positive integer");
  if (radius <= 0.0 || height <= 0.0 || radius + height > 0.5 * static_cast<double>(n))
    throw DomainError("gear: radius/tooth_height out of range for the grid");
  const double centre = 0.5 * static_cast<double>(n);
  ImageD img = ImageD::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double y = static_cast<double>(r) + 0.5 - centre;
      const double x = static_cast<double>(c) + 0.5 - centre;
      const double rho = std::hypot(x, y);
      const double phase = (std::atan2(y, x) + std::numbers::pi) / (2.0 * std::numbers::pi) * teeth;
      const bool tooth = phase - std::floor(phase) < 0.5;
      if (rho <= radius || (tooth && rho <= radius + height)) img(r, c) = 1.0;
    }
  }
  return img;
}

// Half disk (flat side on the right) and a rectangular column, separated by
// a vertical band of gap_px columns.
ImageD semicylinder_gap(const PhantomSpec& spec) {
  const Eigen::Index n = spec.side;
  const double gap = param(spec, "gap_px", 1.0);
  if (gap < 1.0 || gap != std::floor(gap) || gap > static_cast<double>(n) / 4.0)
    throw DomainError("semicylinder_gap: gap_px must be an integer in [1, n/4]");
  const Eigen::Index gap_start = n / 2;
  const auto gap_end = gap_start + static_cast<Eigen::Index>(gap);
  const double radius = 0.35 * static_cast<double>(n);
  const double centre_row = 0.5 * static_cast<double>(n);
  const Eigen::Index column_end = std::min<Eigen::Index>(n, gap_end + std::max<Eigen::Index>(2, n / 4));
  ImageD img = ImageD::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double y = static_cast<double>(r) + 0.5 - centre_row;
    if (std::abs(y) > radius) continue;
    for (Eigen::Index c = 0; c < gap_start; ++c) {
      const double x = static_cast<double>(c) + 0.5 - static_cast<double>(gap_start);
      if (std::hypot(x, y) <= radius) img(r, c) = 1.0;
    }
    for (Eigen::Index c = gap_end; c < column_end; ++c) img(r, c) = 1.0;
  }
  return img;
}

ImageD knife_edge(const PhantomSpec& spec) {
  const Eigen::Index n = spec.side;
  const double position = param(spec, "position", static_cast<double>(n / 2));
  const double orientation = param(spec, "orientation", 0.0);
  if (position < 0.0 || position > static_cast<double>(n)) throw DomainError("knife_edge: position off grid");
  if (orientation != 0.0 && orientation != 1.0) throw DomainError("knife_edge: orientation must be 0 or 1");
  ImageD img = ImageD::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      if (static_cast<double>(orientation == 0.0 ? c : r) >= position) img(r, c) = 1.0;
  return img;
}

ImageD bar_target(const PhantomSpec& spec) {
  const Eigen::Index n = spec.side;
  const double period = param(spec, "period", 4.0);
  if (period < 2.0 || period != std::floor(period) || static_cast<Eigen::Index>(period) % 2 != 0)
    throw DomainError("bar_target: period must be an even integer >= 2");
  const auto half = static_cast<Eigen::Index>(period) / 2;
  ImageD img(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) img(r, c) = (c / half) % 2 == 0 ? 1.0 : 0.0;
  return img;
}

}  // namespace

std::string to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::letters: return "letters";
    case PhantomKind::gear: return "gear";
    case PhantomKind::semicylinder_gap: return "semicylinder_gap";
    case PhantomKind::knife_edge: return "knife_edge";
    case PhantomKind::bar_target: return "bar_target";
    case PhantomKind::uniform: return "uniform";
  }
  return "uniform";
}

PhantomKind parse_phantom_kind(std::string_view s) {
  for (auto k : {PhantomKind::letters, PhantomKind::gear, PhantomKind::semicylinder_gap, PhantomKind::knife_edge,
                 PhantomKind::bar_target, PhantomKind::uniform})
    if (s == to_string(k)) return k;
  throw DomainError("unknown phantom kind '" + std::string(s) + "'");
}

Phantom generate(const PhantomSpec& spec) {
  if (spec.side < 1 || !is_pow2(static_cast<std::size_t>(spec.side)))
    throw SizeError("phantom side must be a power of two");
  if (!(spec.pixel_pitch_um > 0.0)) throw DomainError("phantom pixel pitch must be positive");
  Phantom out;
  out.pixel_pitch_um = spec.pixel_pitch_um;
  switch (spec.kind) {
    case PhantomKind::letters: out.transmission = letters(spec); break;
    case PhantomKind::gear: out.transmission = gear(spec); break;
    case PhantomKind::semicylinder_gap: out.transmission = semicylinder_gap(spec); break;
    case PhantomKind::knife_edge: out.transmission = knife_edge(spec); break;
    case PhantomKind::bar_target: out.transmission = bar_target(spec); break;
    case PhantomKind::uniform: {
      const double value = param(spec, "value", 1.0);
      if (value < 0.0 || value > 1.0) throw DomainError("uniform: value outside [0, 1]");
      out.transmission = ImageD::Constant(spec.side, spec.side, value);
      break;
    }
  }
  return out;
}

ImageI transmission_regions(const ImageD& transmission) {
  ImageI labels(transmission.rows(), transmission.cols());
  for (Eigen::Index i = 0; i < transmission.size(); ++i) {
    const double t = transmission.data()[i];
    labels.data()[i] = t == 1.0 ? 1 : (t == 0.0 ? 0 : -1);
  }
  return labels;
}

}  // namespace ghostpixel
