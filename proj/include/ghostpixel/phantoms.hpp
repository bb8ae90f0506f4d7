#pragma once

#include "ghostpixel/core.hpp"
#include "ghostpixel/optics.hpp"

#include <map>
#include <string>
#include <string_view>

namespace ghostpixel {

enum class PhantomKind { letters, gear, semicylinder_gap, knife_edge, bar_target, uniform };

std::string to_string(PhantomKind k);
PhantomKind parse_phantom_kind(std::string_view s);

/// Test object description. Recognised parameters per kind (defaults in
/// parentheses, lengths in pixels unless noted):
///   letters:          text ("CAS"), margin (1)
///   gear:             teeth (14), radius (0.3 n), tooth_height (0.1 n)
///   semicylinder_gap: gap_px (1)
///   knife_edge:       position (n / 2), orientation (0 = vertical edge, 1 = horizontal)
///   bar_target:       period (4)
///   uniform:          value (1)
struct PhantomSpec {
  PhantomKind kind = PhantomKind::uniform;
  Eigen::Index side = 32;
  double pixel_pitch_um = 10.0;
  std::map<std::string, double> parameters;
  std::string text = "CAS";
};

Phantom generate(const PhantomSpec& spec);

/// Pixels of a binary phantom as a CNR region map: 1 where transmission is
/// 1, 0 where it is 0, -1 (ignored) elsewhere.
ImageI transmission_regions(const ImageD& transmission);

}  // namespace ghostpixel
