#include "ghostpixel/reconstruct.hpp"
#include "ghostpixel/wavelet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace ghostpixel {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double relative_residual(const MeasurementOperator& op, const VectorD& x, const VectorD& b) {
  const double r = (op.apply(x) - b).norm();
  const double nb = b.norm();
  if (nb == 0.0) return r == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return r / nb;
}

double relative_change(const VectorD& next, const VectorD& prev) {
  const double d = (next - prev).norm();
  const double scale = prev.norm();
  if (scale == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return d / scale;
}

}  // namespace

// ---------------------------------------------------------------------------
// MeasurementOperator

MeasurementOperator MeasurementOperator::ideal_hadamard(int order_log2, std::vector<std::size_t> indices,
                                                         bool binary) {
  if (order_log2 < 0 || order_log2 > kMaxBasisOrder) throw SizeError("ideal_hadamard: order out of range");
  MeasurementOperator op;
  op.mode_ = Mode::ideal_hadamard;
  op.order_log2_ = order_log2;
  op.side_ = Eigen::Index{1} << order_log2;
  op.binary_ = binary;
  const std::size_t N = static_cast<std::size_t>(op.cols());
  VectorD selected = VectorD::Zero(op.cols());
  for (std::size_t idx : indices) {
    if (idx >= N) throw SizeError("ideal_hadamard: row index out of range");
    if (selected(static_cast<Eigen::Index>(idx)) != 0.0) throw DomainError("ideal_hadamard: duplicate row index");
    selected(static_cast<Eigen::Index>(idx)) = 1.0;
  }
  op.rows_ = static_cast<Eigen::Index>(indices.size());
  op.indices_ = std::move(indices);
  if (binary) {
    // count of selected rows with +1 at each pixel
    op.normal_diag_ = ((static_cast<double>(op.rows_) + fwht(selected).array()) / 2.0).matrix();
  } else {
    op.normal_diag_ = VectorD::Constant(op.cols(), static_cast<double>(op.rows_));
  }
  return op;
}

MeasurementOperator MeasurementOperator::from_patterns(std::span<const ImageD> patterns) {
  if (patterns.empty()) throw SizeError("from_patterns: no patterns");
  MeasurementOperator op;
  op.mode_ = Mode::explicit_patterns;
  op.side_ = patterns.front().rows();
  op.rows_ = static_cast<Eigen::Index>(patterns.size());
  op.dense_.resize(op.rows_, op.side_ * op.side_);
  for (Eigen::Index i = 0; i < op.rows_; ++i) {
    const ImageD& p = patterns[static_cast<std::size_t>(i)];
    if (p.rows() != op.side_ || p.cols() != op.side_) throw SizeError("from_patterns: inconsistent pattern shapes");
    op.dense_.row(i) = flat(p).transpose();
  }
  op.normal_diag_ = op.dense_.colwise().squaredNorm().transpose();
  return op;
}

VectorD MeasurementOperator::apply(const VectorD& x) const {
  if (x.size() != cols()) throw SizeError("operator apply: length mismatch");
  if (mode_ == Mode::explicit_patterns) return dense_ * x;
  const VectorD hx = fwht(x);
  VectorD y(rows_);
  const double total = binary_ ? x.sum() : 0.0;
  for (Eigen::Index i = 0; i < rows_; ++i) {
    const double v = hx(static_cast<Eigen::Index>(indices_[static_cast<std::size_t>(i)]));
    y(i) = binary_ ? (total + v) / 2.0 : v;
  }
  return y;
}

VectorD MeasurementOperator::adjoint(const VectorD& y) const {
  if (y.size() != rows_) throw SizeError("operator adjoint: length mismatch");
  if (mode_ == Mode::explicit_patterns) return dense_.transpose() * y;
  VectorD z = VectorD::Zero(cols());
  for (Eigen::Index i = 0; i < rows_; ++i) z(static_cast<Eigen::Index>(indices_[static_cast<std::size_t>(i)])) = y(i);
  fwht_inplace(z);
  if (binary_) z = ((z.array() + y.sum()) / 2.0).matrix();
  return z;
}

VectorD MeasurementOperator::precondition(const VectorD& r, double alpha, double gamma) const {
  if (mode_ == Mode::ideal_hadamard && !binary_) {
    // A^T A = N P with P the projector onto the selected rows.
    const double N = static_cast<double>(cols());
    VectorD hr = fwht(r);
    VectorD kept = VectorD::Zero(cols());
    for (std::size_t idx : indices_) kept(static_cast<Eigen::Index>(idx)) = hr(static_cast<Eigen::Index>(idx));
    VectorD pr = fwht(kept) / N;
    return (r - pr) / alpha + pr / (alpha + gamma * N);
  }
  return (r.array() / (alpha + gamma * normal_diag_.array())).matrix();
}

double MeasurementOperator::norm_estimate(int iterations) const {
  CounterRng rng(0x5eed, 0, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorD v(cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    VectorD w = normal(v);
    estimate = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
  }
  return estimate;
}

MeasurementOperator build_operator(const HadamardBasis& basis, std::span<const std::size_t> indices,
                                   const ImperfectionModel& imp, const std::optional<SourceModel>& src,
                                   double pixel_pitch_um, OperatorMode mode, bool differential) {
  imp.validate();
  if (mode == OperatorMode::ideal_hadamard) {
    if (imp.modulation_depth != 1.0 || imp.edge_blur_sigma != 0.0 || src)
      throw DomainError("ideal_hadamard operator requires D_r = 1, no edge blur and no source blur");
    return MeasurementOperator::ideal_hadamard(basis.order_log2, {indices.begin(), indices.end()}, !differential);
  }
  std::vector<ImageD> rows;
  rows.reserve(indices.size());
  const Eigen::Index n = basis.side();
  for (std::size_t idx : indices) {
    const PatternPair pair = make_pattern_pair(basis, idx, n);
    ImageD plus = render_mask(pair.positive, imp);
    if (src) plus = source_blur(plus, *src, pixel_pitch_um);
    if (!differential) {
      rows.push_back(std::move(plus));
      continue;
    }
    ImageD minus = render_mask(pair.negative, imp);
    if (src) minus = source_blur(minus, *src, pixel_pitch_um);
    rows.push_back(plus - minus);
  }
  return MeasurementOperator::from_patterns(rows);
}

MeasurementOperator design_operator(const MeasurementSeries& series) {
  const auto& src = series.patterns;
  if (src.kind == PatternSource::Kind::hadamard)
    return MeasurementOperator::ideal_hadamard(src.basis.order_log2, src.indices, !series.differential);
  return MeasurementOperator::from_patterns(
      random_speckle_patterns(src.speckle_side, src.speckle_count, src.speckle_size_px, src.speckle_seed));
}

// ---------------------------------------------------------------------------
// Correlation estimators

ReconResult correlation_gi(const VectorD& buckets, std::span<const ImageD> patterns) {
  const auto start = Clock::now();
  const auto m = static_cast<Eigen::Index>(patterns.size());
  if (buckets.size() != m) throw SizeError("correlation_gi: bucket and pattern counts differ");
  if (m < 2) throw SizeError("correlation_gi: need at least 2 exposures");
  const Eigen::Index rows = patterns.front().rows();
  const Eigen::Index cols = patterns.front().cols();
  ImageD weighted = ImageD::Zero(rows, cols);
  ImageD mean_pattern = ImageD::Zero(rows, cols);
  for (Eigen::Index i = 0; i < m; ++i) {
    const ImageD& p = patterns[static_cast<std::size_t>(i)];
    if (p.rows() != rows || p.cols() != cols) throw SizeError("correlation_gi: inconsistent pattern shapes");
    weighted += buckets(i) * p;
    mean_pattern += p;
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  ReconResult out;
  out.image = weighted * inv_m - (mean_pattern * inv_m) * (buckets.sum() * inv_m);
  out.final_residual = std::numeric_limits<double>::quiet_NaN();
  out.wall_time_s = seconds_since(start);
  return out;
}

ReconResult correlation_gi(const MeasurementSeries& series, std::span<const ImageD> patterns) {
  return correlation_gi(series.effective_buckets(), patterns);
}

ReconResult correlation_gi(const MeasurementSeries& series) {
  std::vector<ImageD> patterns;
  patterns.reserve(series.records.size());
  for (std::size_t r = 0; r < series.records.size(); ++r) patterns.push_back(design_pattern(series, r));
  return correlation_gi(series, patterns);
}

ReconResult differential_gi(const MeasurementSeries& series) {
  const auto start = Clock::now();
  if (series.patterns.kind != PatternSource::Kind::hadamard)
    throw DomainError("differential_gi: requires a Hadamard series");
  if (!series.differential) throw DomainError("differential_gi: series has no bucket_minus values");
  for (const auto& rec : series.records)
    if (!rec.bucket_minus) throw FormatError("differential_gi: record without bucket_minus");
  if (series.records.empty()) throw SizeError("differential_gi: empty series");
  const VectorD b = series.effective_buckets();
  const auto op = MeasurementOperator::ideal_hadamard(series.patterns.basis.order_log2, series.patterns.indices);
  const VectorD g = op.adjoint(b) / static_cast<double>(b.size());
  ReconResult out;
  out.image = as_image(g, op.side());
  out.final_residual = relative_residual(op, g, b);
  out.wall_time_s = seconds_since(start);
  return out;
}

// ---------------------------------------------------------------------------
// Total variation ADMM

namespace {

struct Gradient {
  VectorD h;
  VectorD v;
};

Gradient grad(const VectorD& x, Eigen::Index n) {
  Gradient g{VectorD::Zero(x.size()), VectorD::Zero(x.size())};
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const Eigen::Index i = r * n + c;
      if (c + 1 < n) g.h(i) = x(i + 1) - x(i);
      if (r + 1 < n) g.v(i) = x(i + n) - x(i);
    }
  }
  return g;
}

VectorD grad_adjoint(const VectorD& ph, const VectorD& pv, Eigen::Index n) {
  VectorD out = VectorD::Zero(ph.size());
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const Eigen::Index i = r * n + c;
      if (c + 1 < n) {
        out(i + 1) += ph(i);
        out(i) -= ph(i);
      }
      if (r + 1 < n) {
        out(i + n) += pv(i);
        out(i) -= pv(i);
      }
    }
  }
  return out;
}

VectorD shrink(const VectorD& v, double t) {
  return v.unaryExpr([t](double c) { return std::copysign(std::max(std::abs(c) - t, 0.0), c); });
}

double tv_of(const VectorD& x, Eigen::Index n) {
  const Gradient g = grad(x, n);
  return g.h.lpNorm<1>() + g.v.lpNorm<1>();
}

double tv_objective(const MeasurementOperator& op, const VectorD& x, const VectorD& b, double mu) {
  return tv_of(x, op.side()) + 0.5 * mu * (op.apply(x) - b).squaredNorm();
}

// Preconditioned CG on (beta D^T D + mu A^T A) x = rhs, warm-started at x.
void solve_x_update(const MeasurementOperator& op, double beta, double mu, const VectorD& rhs, VectorD& x,
                    int max_iters, double tol) {
  const Eigen::Index n = op.side();
  const auto system = [&](const VectorD& v) {
    const Gradient g = grad(v, n);
    return VectorD(beta * grad_adjoint(g.h, g.v, n) + mu * op.normal(v));
  };
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    x.setZero();
    return;
  }
  VectorD r = rhs - system(x);
  VectorD z = op.precondition(r, 4.0 * beta, mu);
  VectorD p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iters && r.norm() > tol * rhs_norm; ++it) {
    const VectorD kp = system(p);
    const double pkp = p.dot(kp);
    if (!(pkp > 0.0)) break;
    const double alpha = rz / pkp;
    x += alpha * p;
    r -= alpha * kp;
    z = op.precondition(r, 4.0 * beta, mu);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
}

}  // namespace

double total_variation(const ImageD& image) {
  if (image.rows() != image.cols()) throw SizeError("total_variation: image must be square");
  return tv_of(VectorD(flat(image)), image.rows());
}

ReconResult tv_admm(const MeasurementOperator& op, const VectorD& buckets, const TvParams& params) {
  const auto start = Clock::now();
  if (buckets.size() != op.rows()) throw SizeError("tv_admm: bucket count does not match operator rows");
  if (!(params.mu > 0.0) || !(params.beta > 0.0)) throw DomainError("tv_admm: mu and beta must be positive");
  if (params.max_iters < 1 || !(params.tol >= 0.0)) throw DomainError("tv_admm: invalid iteration controls");

  const Eigen::Index n = op.side();
  const Eigen::Index N = op.cols();
  const double beta = params.beta;
  const double mu = params.mu;
  const VectorD atb = mu * op.adjoint(buckets);

  // The ADMM primal sequence is not monotone in the objective; the returned
  // image is the lowest-objective iterate seen and objective_trace follows it.
  VectorD x = VectorD::Zero(N);
  VectorD best = x;
  double best_objective = tv_objective(op, x, buckets, mu);
  VectorD lam_h = VectorD::Zero(N);
  VectorD lam_v = VectorD::Zero(N);
  ReconResult out;
  out.converged = false;
  for (int it = 0; it < params.max_iters; ++it) {
    const Gradient g = grad(x, n);
    const VectorD w_h = shrink(g.h - lam_h / beta, 1.0 / beta);
    const VectorD w_v = shrink(g.v - lam_v / beta, 1.0 / beta);
    const VectorD rhs = grad_adjoint(beta * w_h + lam_h, beta * w_v + lam_v, n) + atb;
    VectorD next = x;
    solve_x_update(op, beta, mu, rhs, next, params.cg_iters, params.cg_tol);
    const Gradient gn = grad(next, n);
    lam_h -= beta * (gn.h - w_h);
    lam_v -= beta * (gn.v - w_v);

    const double change = relative_change(next, x);
    x = std::move(next);
    const double objective = tv_objective(op, x, buckets, mu);
    if (objective <= best_objective) {
      best_objective = objective;
      best = x;
    }
    out.objective_trace.push_back(best_objective);
    out.iterations = it + 1;
    if (change < params.tol) {
      out.converged = true;
      break;
    }
  }
  out.image = as_image(best, n);
  out.final_residual = relative_residual(op, best, buckets);
  out.wall_time_s = seconds_since(start);
  return out;
}

// ---------------------------------------------------------------------------
// Wavelet-sparse FISTA

namespace {

double fista_objective(const MeasurementOperator& op, const VectorD& x, const VectorD& b, double lambda, int levels) {
  const double fidelity = 0.5 * (op.apply(x) - b).squaredNorm();
  if (lambda == 0.0) return fidelity;
  return fidelity + lambda * dwt2(as_image(x, op.side()), levels).detail_l1();
}

VectorD wavelet_prox(const VectorD& v, Eigen::Index n, double threshold, int levels) {
  if (threshold == 0.0) return v;
  ImageD img = idwt2(soft_threshold(dwt2(as_image(v, n), levels), threshold));
  return flat(img);
}

}  // namespace

ReconResult wavelet_fista(const MeasurementOperator& op, const VectorD& buckets, const FistaParams& params) {
  const auto start = Clock::now();
  if (buckets.size() != op.rows()) throw SizeError("wavelet_fista: bucket count does not match operator rows");
  if (!(params.lambda >= 0.0)) throw DomainError("wavelet_fista: lambda must be non-negative");
  if (params.max_iters < 1 || !(params.tol >= 0.0)) throw DomainError("wavelet_fista: invalid iteration controls");
  const Eigen::Index n = op.side();
  if (params.levels < 1 || n % (Eigen::Index{1} << params.levels) != 0)
    throw SizeError("wavelet_fista: image side not divisible by 2^levels");

  // The power estimate approaches the norm from below; the margin keeps 1/L a valid step.
  const double lipschitz = 1.01 * op.norm_estimate(20);
  ReconResult out;
  out.converged = false;
  VectorD x = VectorD::Zero(op.cols());
  if (lipschitz == 0.0) {
    out.image = as_image(x, n);
    out.converged = true;
    out.final_residual = relative_residual(op, x, buckets);
    out.wall_time_s = seconds_since(start);
    return out;
  }
  VectorD y = x;
  double t = 1.0;
  double objective = fista_objective(op, x, buckets, params.lambda, params.levels);
  for (int it = 0; it < params.max_iters; ++it) {
    const VectorD gradient = op.adjoint(op.apply(y) - buckets);
    const VectorD z = wavelet_prox(y - gradient / lipschitz, n, params.lambda / lipschitz, params.levels);
    const double z_objective = fista_objective(op, z, buckets, params.lambda, params.levels);
    const double step = relative_change(z, y);

    // Monotone variant: keep the better of the prox point and the previous iterate.
    const VectorD prev = x;
    if (z_objective <= objective) {
      x = z;
      objective = z_objective;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - prev);
    t = t_next;

    out.objective_trace.push_back(objective);
    out.iterations = it + 1;
    if (step < params.tol) {
      out.converged = true;
      break;
    }
  }
  out.image = as_image(x, n);
  out.final_residual = relative_residual(op, x, buckets);
  out.wall_time_s = seconds_since(start);
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::gi: return "gi";
    case Method::dgi: return "dgi";
    case Method::tv: return "tv";
    case Method::wfista: return "wfista";
  }
  return "gi";
}

Method parse_method(std::string_view s) {
  for (auto m : {Method::gi, Method::dgi, Method::tv, Method::wfista})
    if (s == to_string(m)) return m;
  throw DomainError("unknown reconstruction method '" + std::string(s) + "'");
}

}  // namespace ghostpixel
