#include "ghostpixel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ghostpixel {

double cnr(const ImageD& image, const RegionMask& regions) {
  if (image.rows() != regions.rows() || image.cols() != regions.cols())
    throw SizeError("cnr: image and region mask shapes differ");
  double sum[2] = {0.0, 0.0};
  Eigen::Index count[2] = {0, 0};
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const int label = regions.data()[i];
    if (label != 0 && label != 1) continue;
    sum[label] += image.data()[i];
    ++count[label];
  }
  if (count[0] < 2 || count[1] < 2) throw DomainError("cnr: each region needs at least 2 pixels");
  const double mean[2] = {sum[0] / static_cast<double>(count[0]), sum[1] / static_cast<double>(count[1])};
  double var[2] = {0.0, 0.0};
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const int label = regions.data()[i];
    if (label != 0 && label != 1) continue;
    const double d = image.data()[i] - mean[label];
    var[label] += d * d;
  }
  // population variance
  var[0] /= static_cast<double>(count[0]);
  var[1] /= static_cast<double>(count[1]);
  const double pooled = var[0] + var[1];
  const double scale = std::max({1.0, mean[0] * mean[0], mean[1] * mean[1]});
  if (pooled <= 1e-24 * scale) throw DegenerateError("cnr: both regions have zero variance");
  return (mean[1] - mean[0]) / std::sqrt(pooled);
}

double modulation_depth(const VectorD& profile) {
  if (profile.size() == 0) throw SizeError("modulation_depth: empty profile");
  const double hi = profile.maxCoeff();
  if (!(hi > 0.0)) throw DomainError("modulation_depth: profile maximum must be positive");
  return (hi - profile.minCoeff()) / hi;
}

namespace {

struct GaussFit {
  double amplitude;
  double centre;
  double sigma;
};

constexpr double kMinSigma = 0.2;

double fit_cost(const VectorD& x, const VectorD& y, const GaussFit& g) {
  double cost = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double t = (x(i) - g.centre) / g.sigma;
    const double r = g.amplitude * std::exp(-0.5 * t * t) - y(i);
    cost += r * r;
  }
  return cost;
}

// Levenberg-Marquardt on (amplitude, centre, sigma) with sigma kept above a
// sub-sample floor so a single-sample spike cannot collapse the width.
GaussFit fit_gaussian(const VectorD& x, const VectorD& y, GaussFit g) {
  double damping = 1e-3;
  double cost = fit_cost(x, y, g);
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double t = (x(i) - g.centre) / g.sigma;
      const double e = std::exp(-0.5 * t * t);
      const double r = g.amplitude * e - y(i);
      const Eigen::Vector3d j(e, g.amplitude * e * t / g.sigma, g.amplitude * e * t * t / g.sigma);
      jtj += j * j.transpose();
      jtr += j * r;
    }
    bool improved = false;
    while (damping < 1e12) {
      Eigen::Matrix3d a = jtj;
      a.diagonal() *= 1.0 + damping;
      a.diagonal().array() += 1e-12;
      const Eigen::Vector3d step = a.ldlt().solve(-jtr);
      const GaussFit trial{g.amplitude + step(0), g.centre + step(1), std::max(kMinSigma, g.sigma + step(2))};
      const double trial_cost = fit_cost(x, y, trial);
      if (trial_cost < cost) {
        const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
        g = trial;
        cost = trial_cost;
        damping = std::max(damping / 3.0, 1e-12);
        improved = true;
        if (rel < 1e-14) return g;
        break;
      }
      damping *= 4.0;
    }
    if (!improved) break;
  }
  return g;
}

// Position where the rising profile first reaches `level`, linearly interpolated.
double crossing(const VectorD& e, double level) {
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (e(i) >= level) {
      if (i == 0) return 0.0;
      const double d = e(i) - e(i - 1);
      return static_cast<double>(i - 1) + (d > 0.0 ? (level - e(i - 1)) / d : 1.0);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double knife_edge_fwhm(const VectorD& edge_profile, double pitch) {
  if (!(pitch > 0.0)) throw DomainError("knife_edge_fwhm: pitch must be positive");
  const Eigen::Index n = edge_profile.size();
  if (n < 3) throw DomainError("knife_edge_fwhm: profile too short");
  const double lo = edge_profile.minCoeff();
  const double hi = edge_profile.maxCoeff();
  const double rise = edge_profile(n - 1) - edge_profile(0);
  if (!(hi - lo > 0.0) || rise == 0.0) throw DomainError("knife_edge_fwhm: no edge in profile");

  VectorD e = (edge_profile.array() - lo) / (hi - lo);
  if (rise < 0.0) e = (1.0 - e.array()).matrix();
  const double x10 = crossing(e, 0.1);
  const double x90 = crossing(e, 0.9);
  if (std::isnan(x10) || std::isnan(x90) || x90 < x10)
    throw DomainError("knife_edge_fwhm: no 10%-90% edge crossing");

  VectorD x(n - 2);
  VectorD lsf(n - 2);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    x(i - 1) = static_cast<double>(i);
    lsf(i - 1) = 0.5 * (e(i + 1) - e(i - 1));
  }
  Eigen::Index peak = 0;
  lsf.maxCoeff(&peak);
  const double rise_width = x90 - x10;
  GaussFit init{lsf(peak), x(peak), std::max(kMinSigma, rise_width / 1.083 / kFwhmPerSigma)};
  const GaussFit fit = fit_gaussian(x, lsf, init);
  return kFwhmPerSigma * fit.sigma * pitch;
}

double normalized_correlation(const ImageD& a, const ImageD& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw SizeError("ncorr: shapes differ");
  const auto da = (a.array() - a.mean()).eval();
  const auto db = (b.array() - b.mean()).eval();
  const double na = std::sqrt((da * da).sum());
  const double nb = std::sqrt((db * db).sum());
  if (na == 0.0 || nb == 0.0) throw DegenerateError("ncorr: constant input");
  return (da * db).sum() / (na * nb);
}

ImageComparison mse_psnr_ncorr(const ImageD& a, const ImageD& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw SizeError("mse: shapes differ");
  ImageComparison out;
  out.mse = (a - b).squaredNorm() / static_cast<double>(a.size());
  out.psnr = out.mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / out.mse);
  out.ncorr = normalized_correlation(a, b);
  return out;
}

ImageD minmax_normalize(const ImageD& image) {
  const double lo = image.minCoeff();
  const double hi = image.maxCoeff();
  if (!(hi > lo)) return ImageD::Zero(image.rows(), image.cols());
  return ((image.array() - lo) / (hi - lo)).matrix();
}

}  // namespace ghostpixel
