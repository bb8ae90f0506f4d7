#include "ghostpixel/optics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

namespace ghostpixel {

void ImperfectionModel::validate() const {
  if (!(modulation_depth >= 0.0 && modulation_depth <= 1.0))
    throw DomainError("modulation depth must lie in [0, 1]");
  if (!(edge_blur_sigma >= 0.0) || !(jitter_sigma >= 0.0))
    throw DomainError("imperfection sigmas must be non-negative");
}

void SourceModel::validate() const {
  if (!(fwhm_x_um > 0.0 && fwhm_y_um > 0.0 && source_to_mask_mm > 0.0 && mask_to_object_mm > 0.0))
    throw DomainError("source size and distances must be positive");
}

std::pair<double, double> SourceModel::blur_fwhm_px(double pixel_pitch_um) const {
  validate();
  if (!(pixel_pitch_um > 0.0)) throw DomainError("pixel pitch must be positive");
  const double magnification = mask_to_object_mm / source_to_mask_mm;
  return {fwhm_x_um * magnification / pixel_pitch_um, fwhm_y_um * magnification / pixel_pitch_um};
}

void NoiseModel::validate() const {
  if (!(photon_scale >= 0.0) || !(read_noise_sigma >= 0.0))
    throw DomainError("photon scale and read noise must be non-negative");
}

void Phantom::validate() const {
  if (transmission.rows() != transmission.cols()) throw SizeError("phantom must be square");
  if ((transmission.array() < 0.0).any() || (transmission.array() > 1.0).any())
    throw DomainError("phantom transmission outside [0, 1]");
}

namespace {

VectorD gaussian_kernel(double sigma) {
  const auto radius = static_cast<Eigen::Index>(std::ceil(3.0 * sigma));
  VectorD k(2 * radius + 1);
  for (Eigen::Index i = -radius; i <= radius; ++i)
    k(i + radius) = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
  return k / k.sum();
}

// Correlates each row with k; out-of-range taps read `pad`.
ImageD blur_rows(const ImageD& in, const VectorD& k, double pad) {
  const Eigen::Index radius = k.size() / 2;
  const Eigen::Index cols = in.cols();
  ImageD out(in.rows(), cols);
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index t = -radius; t <= radius; ++t) {
        const Eigen::Index cc = c + t;
        acc += k(t + radius) * ((cc >= 0 && cc < cols) ? in(r, cc) : pad);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

ImageD gaussian_blur(const ImageD& image, double sigma_x, double sigma_y, double pad) {
  if (!(sigma_x >= 0.0) || !(sigma_y >= 0.0)) throw DomainError("blur sigma must be non-negative");
  ImageD out = image;
  if (sigma_x > 0.0) out = blur_rows(out, gaussian_kernel(sigma_x), pad);
  if (sigma_y > 0.0) out = blur_rows(out.transpose(), gaussian_kernel(sigma_y), pad).transpose();
  return out;
}

ImageD render_mask(const ImageD& pattern, const ImperfectionModel& imp) {
  if ((pattern.array() != 0.0 && pattern.array() != 1.0).any())
    throw DomainError("render_mask: pattern is not binary");
  return render_gray(pattern, imp);
}

ImageD render_gray(const ImageD& pattern, const ImperfectionModel& imp) {
  imp.validate();
  const double floor = 1.0 - imp.modulation_depth;
  const ImageD mapped = (floor + imp.modulation_depth * pattern.array()).matrix();
  return gaussian_blur(mapped, imp.edge_blur_sigma, imp.edge_blur_sigma, floor);
}

ImageD source_blur(const ImageD& image, const SourceModel& src, double pixel_pitch_um) {
  const auto [fx, fy] = src.blur_fwhm_px(pixel_pitch_um);
  return gaussian_blur(image, fx / kFwhmPerSigma, fy / kFwhmPerSigma, 0.0);
}

ImageD shift_image(const ImageD& image, int dx, int dy) {
  ImageD out = ImageD::Zero(image.rows(), image.cols());
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    const Eigen::Index sr = r - dy;
    if (sr < 0 || sr >= image.rows()) continue;
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const Eigen::Index sc = c - dx;
      if (sc >= 0 && sc < image.cols()) out(r, c) = image(sr, sc);
    }
  }
  return out;
}

double bucket_measure(const ImageD& rendered_pattern, const Phantom& phantom, const NoiseModel& noise,
                      std::uint64_t exposure_index) {
  if (rendered_pattern.rows() != phantom.transmission.rows() ||
      rendered_pattern.cols() != phantom.transmission.cols())
    throw SizeError("bucket_measure: pattern and phantom shapes differ");
  noise.validate();
  const double signal = rendered_pattern.cwiseProduct(phantom.transmission).sum();
  CounterRng rng(noise.seed, static_cast<std::uint64_t>(Stream::noise), exposure_index);
  double value = signal;
  if (noise.photon_scale > 0.0) {
    const double mean = signal * noise.photon_scale;
    double counts = 0.0;
    if (mean > 0.0) counts = static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
    value = counts / noise.photon_scale;
  }
  if (noise.read_noise_sigma > 0.0) value += std::normal_distribution<double>(0.0, noise.read_noise_sigma)(rng);
  return value + noise.dark_current;
}

VectorD MeasurementSeries::effective_buckets() const {
  VectorD b(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (differential && !rec.bucket_minus) throw FormatError("differential record without bucket_minus");
    b(static_cast<Eigen::Index>(i)) = differential ? rec.bucket_plus - *rec.bucket_minus : rec.bucket_plus;
  }
  return b;
}

ImageD speckle_pattern(Eigen::Index n, int speckle_size_px, std::uint64_t seed, std::size_t pattern_index) {
  if (n < 1) throw SizeError("speckle side must be positive");
  if (speckle_size_px < 1) throw DomainError("speckle size must be >= 1 pixel");
  if (speckle_size_px > n) throw SizeError("speckle size exceeds pattern side");
  const Eigen::Index cells = (n + speckle_size_px - 1) / speckle_size_px;
  CounterRng rng(seed, static_cast<std::uint64_t>(Stream::speckle), pattern_index);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ImageD grid(cells, cells);
  for (Eigen::Index i = 0; i < grid.size(); ++i) grid.data()[i] = gauss(rng);

  ImageD out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = grid(r / speckle_size_px, c / speckle_size_px);
  const double lo = out.minCoeff();
  const double hi = out.maxCoeff();
  if (hi - lo <= 0.0) return ImageD::Constant(n, n, 0.5);
  return ((out.array() - lo) / (hi - lo)).matrix();
}

std::vector<ImageD> random_speckle_patterns(Eigen::Index n, std::size_t count, int speckle_size_px,
                                            std::uint64_t seed) {
  if (count < 1) throw DomainError("speckle count must be >= 1");
  std::vector<ImageD> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(speckle_pattern(n, speckle_size_px, seed, i));
  return out;
}

ImageD design_pattern(const MeasurementSeries& series, std::size_t record) {
  const auto& src = series.patterns;
  if (src.kind == PatternSource::Kind::speckle)
    return speckle_pattern(src.speckle_side, src.speckle_size_px, src.speckle_seed, record);
  const ImageD h = signed_pattern(src.basis, src.indices.at(record));
  if (series.differential) return h;
  return ((h.array() + 1.0) / 2.0).matrix();
}

namespace {

ImageD expose(const ImageD& pattern, bool binary, const ImperfectionModel& imp,
              const std::optional<SourceModel>& src, const Phantom& phantom, const NoiseModel& noise,
              std::uint64_t exposure, double* bucket) {
  ImageD lit = binary ? render_mask(pattern, imp) : render_gray(pattern, imp);
  if (src) lit = source_blur(lit, *src, phantom.pixel_pitch_um);
  if (imp.jitter_sigma > 0.0) {
    CounterRng rng(noise.seed, static_cast<std::uint64_t>(Stream::jitter), exposure);
    std::normal_distribution<double> gauss(0.0, imp.jitter_sigma);
    const int dx = static_cast<int>(std::lround(gauss(rng)));
    const int dy = static_cast<int>(std::lround(gauss(rng)));
    lit = shift_image(lit, dx, dy);
  }
  *bucket = bucket_measure(lit, phantom, noise, exposure);
  return lit;
}

}  // namespace

MeasurementSeries run_acquisition(const PatternSource& patterns, const Phantom& phantom,
                                  const ImperfectionModel& imp, const std::optional<SourceModel>& src,
                                  const NoiseModel& noise, bool differential, int threads,
                                  const ProgressFn& progress) {
  imp.validate();
  noise.validate();
  phantom.validate();
  if (src) src->validate();
  if (phantom.transmission.rows() != patterns.side())
    throw SizeError("phantom side " + std::to_string(phantom.transmission.rows()) +
                    " does not match pattern side " + std::to_string(patterns.side()));
  if (patterns.kind == PatternSource::Kind::speckle && differential)
    throw DomainError("differential acquisition requires Hadamard patterns");
  if (patterns.kind == PatternSource::Kind::hadamard)
    for (std::size_t idx : patterns.indices)
      if (idx >= patterns.basis.size()) throw SizeError("pattern index out of range for basis");

  MeasurementSeries series;
  series.patterns = patterns;
  series.imperfection = imp;
  series.source = src;
  series.noise = noise;
  series.differential = differential;
  series.records.resize(patterns.count());

  const Eigen::Index n = patterns.side();
  const std::size_t total = patterns.count();
  std::mutex progress_mutex;
  std::size_t done = 0;
  const auto report = [&] {
    if (!progress) return;
    std::lock_guard lock(progress_mutex);
    progress(++done, total);
  };
  parallel_for(total, threads, [&](std::size_t r) {
    MeasurementRecord& rec = series.records[r];
    const std::uint64_t e_plus = differential ? 2 * r : r;
    if (patterns.kind == PatternSource::Kind::speckle) {
      rec.pattern_index = r;
      const ImageD p = speckle_pattern(n, patterns.speckle_size_px, patterns.speckle_seed, r);
      expose(p, false, imp, src, phantom, noise, e_plus, &rec.bucket_plus);
      report();
      return;
    }
    rec.pattern_index = patterns.indices[r];
    const PatternPair pair = make_pattern_pair(patterns.basis, rec.pattern_index, n);
    expose(pair.positive, true, imp, src, phantom, noise, e_plus, &rec.bucket_plus);
    if (differential) {
      double minus = 0.0;
      expose(pair.negative, true, imp, src, phantom, noise, e_plus + 1, &minus);
      rec.bucket_minus = minus;
    }
    report();
  });
  return series;
}

}  // namespace ghostpixel
