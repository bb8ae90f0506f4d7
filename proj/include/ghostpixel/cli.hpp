#pragma once

#include "ghostpixel/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ghostpixel::cli {

enum ExitCode : int { ok = 0, usage = 2, io_error = 3, config_inconsistent = 4 };

/// Entry point of the `ghostpixel` executable.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

/// One (axis value, method, seed) cell of a sweep.
struct SweepRow {
  double value = 0.0;
  std::size_t exposures = 0;
  std::string method;
  std::uint64_t seed = 0;
  double cnr = 0.0;  // NaN when degenerate
  double mse = 0.0;
  double ncorr = 0.0;
  double wall_time_s = 0.0;
};

struct SweepSummary {
  double value = 0.0;
  std::size_t exposures = 0;
  std::string method;
  int seeds = 0;
  double cnr_mean = 0.0, cnr_std = 0.0;
  double mse_mean = 0.0, mse_std = 0.0;
  double ncorr_mean = 0.0, ncorr_std = 0.0;
  double wall_time_mean = 0.0;
};

/// Runs every cell (cells in parallel on `threads`), rows sorted by
/// (value, method, seed). Wall time is zeroed unless sweep.timing is set.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, int threads, bool verbose = false);
/// Mean and population standard deviation per (value, method).
std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string summary_csv(const std::vector<SweepSummary>& rows);

/// Reconstruction of a loaded series with the method and hyperparameters of `cfg`.
ReconResult reconstruct(const MeasurementSeries& series, const ExperimentConfig& cfg);

}  // namespace ghostpixel::cli
