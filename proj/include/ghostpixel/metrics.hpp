#pragma once

#include "ghostpixel/core.hpp"

namespace ghostpixel {

/// Region labels for CNR: 1 = transmitting, 0 = blocking, any other value ignored.
using RegionMask = ImageI;

/// Contrast-to-noise ratio (<G1> - <G0>) / sqrt(var1 + var0) with population
/// variances. Throws DegenerateError when both regions are constant.
double cnr(const ImageD& image, const RegionMask& regions);

/// (max - min) / max of a measured intensity profile.
double modulation_depth(const VectorD& profile);

/// Source/blur FWHM from an edge-spread profile: the ESF is differentiated
/// with central differences and a Gaussian is least-squares fitted to the
/// line-spread function. Returns FWHM in the units of `pitch`.
double knife_edge_fwhm(const VectorD& edge_profile, double pitch);

struct ImageComparison {
  double mse = 0.0;
  double psnr = 0.0;  // +inf when mse == 0; peak value 1
  double ncorr = 0.0;
};

ImageComparison mse_psnr_ncorr(const ImageD& a, const ImageD& b);

/// Pearson correlation over all pixels.
double normalized_correlation(const ImageD& a, const ImageD& b);

/// Affine map of the image onto [0, 1]; a constant image maps to zeros.
ImageD minmax_normalize(const ImageD& image);

}  // namespace ghostpixel
