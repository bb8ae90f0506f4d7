#pragma once

#include "ghostpixel/core.hpp"
#include "ghostpixel/hadamard.hpp"
#include "ghostpixel/optics.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ghostpixel {

/// Linear sensing operator A (M x N) acting on row-major flattened n x n images.
class MeasurementOperator {
 public:
  enum class Mode { ideal_hadamard, explicit_patterns };

  /// Selected rows of H_N applied through the FWHT. With `binary` the rows
  /// are the single-mask patterns (J + h) / 2 instead of the signed rows.
  static MeasurementOperator ideal_hadamard(int order_log2, std::vector<std::size_t> indices, bool binary = false);

  /// Dense operator whose rows are the given n x n patterns.
  static MeasurementOperator from_patterns(std::span<const ImageD> patterns);

  Mode mode() const { return mode_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return side_ * side_; }
  Eigen::Index side() const { return side_; }

  VectorD apply(const VectorD& x) const;
  VectorD adjoint(const VectorD& y) const;
  VectorD normal(const VectorD& x) const { return adjoint(apply(x)); }

  /// Approximate inverse of (alpha I + gamma A^T A): exact for signed ideal
  /// Hadamard rows (A^T A = N P), diagonal otherwise.
  VectorD precondition(const VectorD& r, double alpha, double gamma) const;

  /// Largest eigenvalue of A^T A estimated with `iterations` power steps from a
  /// fixed start vector.
  double norm_estimate(int iterations = 20) const;

 private:
  Mode mode_ = Mode::explicit_patterns;
  Eigen::Index side_ = 0;
  Eigen::Index rows_ = 0;
  int order_log2_ = 0;
  bool binary_ = false;
  std::vector<std::size_t> indices_;
  Eigen::MatrixXd dense_;  // explicit mode, M x N
  VectorD normal_diag_;    // diag(A^T A)
};

enum class OperatorMode { ideal_hadamard, explicit_patterns };

/// Operator for a Hadamard acquisition. Explicit mode stores the rendered
/// (imperfect, source-blurred) patterns: P+ rows, or P+ - P- rows when
/// differential. Ideal mode requires an ideal mask and no source blur.
MeasurementOperator build_operator(const HadamardBasis& basis, std::span<const std::size_t> indices,
                                   const ImperfectionModel& imp, const std::optional<SourceModel>& src,
                                   double pixel_pitch_um, OperatorMode mode, bool differential);

/// Operator built from the designed patterns of a series (what the
/// experimenter knows), matching its effective buckets.
MeasurementOperator design_operator(const MeasurementSeries& series);

struct ReconResult {
  ImageD image;
  int iterations = 0;
  double final_residual = 0.0;  // ||Ax - b|| / ||b||, NaN when undefined
  std::vector<double> objective_trace;
  double wall_time_s = 0.0;
  bool converged = true;
};

/// Second-order correlation G = <P B> - <P><B> over exposures.
ReconResult correlation_gi(const VectorD& buckets, std::span<const ImageD> patterns);
ReconResult correlation_gi(const MeasurementSeries& series, std::span<const ImageD> patterns);
/// Uses the designed pattern of every record.
ReconResult correlation_gi(const MeasurementSeries& series);

/// G = (1/M) sum (P+ - P-) (B+ - B-), evaluated with one FWHT.
ReconResult differential_gi(const MeasurementSeries& series);

struct TvParams {
  double mu = 1e3;    // fidelity weight
  double beta = 32.0; // augmented-Lagrangian penalty on the gradient split
  int max_iters = 500;
  double tol = 1e-6;
  int cg_iters = 100;
  double cg_tol = 1e-10;
};

/// min_x TV(x) + mu/2 ||Ax - b||^2 with anisotropic TV (forward differences,
/// zero gradient at the far boundary), by ADMM on the split w = Dx.
ReconResult tv_admm(const MeasurementOperator& op, const VectorD& buckets, const TvParams& params = {});

struct FistaParams {
  double lambda = 0.0;
  int levels = 3;
  int max_iters = 500;
  double tol = 1e-6;
};

/// min_x 1/2 ||Ax - b||^2 + lambda ||W_detail x||_1 with orthonormal Haar W,
/// by monotone FISTA.
ReconResult wavelet_fista(const MeasurementOperator& op, const VectorD& buckets, const FistaParams& params = {});

/// Anisotropic total variation of an n x n image.
double total_variation(const ImageD& image);

enum class Method { gi, dgi, tv, wfista };
std::string to_string(Method m);
Method parse_method(std::string_view s);

}  // namespace ghostpixel
