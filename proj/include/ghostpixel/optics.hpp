#pragma once

#include "ghostpixel/core.hpp"
#include "ghostpixel/hadamard.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace ghostpixel {

/// Mask fabrication imperfections. Sigmas are in pattern pixels.
struct ImperfectionModel {
  double modulation_depth = 1.0;  // D_r = (D_max - D_min) / D_max
  double edge_blur_sigma = 0.0;
  double jitter_sigma = 0.0;

  void validate() const;
  bool ideal() const { return modulation_depth == 1.0 && edge_blur_sigma == 0.0 && jitter_sigma == 0.0; }
};

/// Extended incoherent source and the projection geometry that turns its
/// size into penumbral blur at the object plane.
struct SourceModel {
  double fwhm_x_um = 37.0;
  double fwhm_y_um = 30.0;
  double source_to_mask_mm = 100.0;
  double mask_to_object_mm = 100.0;

  void validate() const;
  /// Blur FWHM in object-plane pixels along x (columns) and y (rows).
  std::pair<double, double> blur_fwhm_px(double pixel_pitch_um) const;
};

struct NoiseModel {
  double photon_scale = 0.0;  // 0 disables shot noise
  double read_noise_sigma = 0.0;
  double dark_current = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Phantom {
  ImageD transmission;
  double pixel_pitch_um = 10.0;

  void validate() const;
};

/// Separable Gaussian blur with a kernel truncated at +-3 sigma and
/// renormalized; pixels outside the image count as `pad`. sigma = 0 is a no-op.
ImageD gaussian_blur(const ImageD& image, double sigma_x, double sigma_y, double pad = 0.0);

/// Binary pattern -> intensity pattern behind the physical mask. Opaque
/// pixels transmit 1 - D_r; etch slope is modelled by Gaussian edge blur,
/// with the surroundings of the pattern treated as opaque.
ImageD render_mask(const ImageD& pattern, const ImperfectionModel& imp);

/// Same as render_mask for gray-level patterns in [0, 1].
ImageD render_gray(const ImageD& pattern, const ImperfectionModel& imp);

/// Penumbral blur of an extended source (zero padded).
ImageD source_blur(const ImageD& image, const SourceModel& src, double pixel_pitch_um);

/// Integer translation with zero fill: out(r, c) = in(r - dy, c - dx).
ImageD shift_image(const ImageD& image, int dx, int dy);

/// Noisy single-pixel reading for one exposure. Draws come from the
/// counter-based stream keyed by (noise.seed, exposure_index).
double bucket_measure(const ImageD& rendered_pattern, const Phantom& phantom, const NoiseModel& noise,
                      std::uint64_t exposure_index);

/// Acquisition pattern source: a Hadamard basis subset or random speckle.
struct PatternSource {
  enum class Kind { hadamard, speckle } kind = Kind::hadamard;
  // hadamard
  HadamardBasis basis;
  std::vector<std::size_t> indices;
  // speckle
  Eigen::Index speckle_side = 0;
  std::size_t speckle_count = 0;
  int speckle_size_px = 1;
  std::uint64_t speckle_seed = 0;

  std::size_t count() const { return kind == Kind::hadamard ? indices.size() : speckle_count; }
  Eigen::Index side() const { return kind == Kind::hadamard ? basis.side() : speckle_side; }
};

struct MeasurementRecord {
  std::size_t pattern_index = 0;
  double bucket_plus = 0.0;
  std::optional<double> bucket_minus;
};

struct MeasurementSeries {
  PatternSource patterns;
  ImperfectionModel imperfection;
  std::optional<SourceModel> source;
  NoiseModel noise;
  bool differential = false;
  std::vector<MeasurementRecord> records;

  /// B+ for single-mask series, B+ - B- for differential ones.
  VectorD effective_buckets() const;
};

/// Simulates every exposure of the pattern source. Exposure e (acquisition
/// order; differential pairs use 2r and 2r + 1) draws jitter and noise from
/// its own streams, so the result is independent of `threads`.
/// `progress(done, total)` is called after every record, serialized.
using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;
MeasurementSeries run_acquisition(const PatternSource& patterns, const Phantom& phantom,
                                  const ImperfectionModel& imp, const std::optional<SourceModel>& src,
                                  const NoiseModel& noise, bool differential, int threads = 1,
                                  const ProgressFn& progress = {});

/// Sandpaper-like speckle: white Gaussian noise on a ceil(n / size) grid,
/// nearest-neighbour upsampled to n x n and min-max normalized to [0, 1].
/// A pattern without contrast (single cell) is the constant 0.5.
ImageD speckle_pattern(Eigen::Index n, int speckle_size_px, std::uint64_t seed, std::size_t pattern_index);

std::vector<ImageD> random_speckle_patterns(Eigen::Index n, std::size_t count, int speckle_size_px,
                                            std::uint64_t seed);

/// The nominal (designed) pattern of record r as known to the reconstruction:
/// P+ for single-mask Hadamard series, P+ - P- for differential ones, the
/// speckle field for speckle series.
ImageD design_pattern(const MeasurementSeries& series, std::size_t record);

}  // namespace ghostpixel
