#include "ghostpixel/cli.hpp"
#include "ghostpixel/io.hpp"
#include "ghostpixel/metrics.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>

namespace ghostpixel::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr const char* kSweepColumns = R"(Sweep CSV columns (floats at 9 significant digits):
  per-seed file:  value,M,method,seed,cnr,mse,ncorr,wall_time
    value      axis value (exposure count or sampling rate)
    M          patterns exposed (pairs count once for differential acquisition)
    method     hadamard-gi | hadamard-dgi | hadamard-tv | hadamard-wfista |
               speckle-gi | speckle-tv | speckle-wfista
    seed       seed of this run (base seed + run number)
    cnr        contrast-to-noise ratio against the phantom's 1/0 regions (nan if degenerate)
    mse        mean squared error of the min-max normalized image vs the phantom
    ncorr      Pearson correlation with the phantom
    wall_time  reconstruction seconds (0 unless --sweep.timing true)
  summary file:   value,M,method,seeds,cnr_mean,cnr_std,mse_mean,mse_std,ncorr_mean,ncorr_std,wall_time_mean
    std is the population standard deviation over seeds.
Rows are sorted by (value, method, seed).)";

class Log {
 public:
  explicit Log(bool quiet) : quiet_(quiet) {}
  bool quiet() const { return quiet_; }
  template <class... Args>
  void operator()(fmt::format_string<Args...> f, Args&&... args) const {
    if (quiet_) return;
    std::lock_guard lock(mutex_);
    fmt::print(stderr, "ghostpixel: {}\n", fmt::format(f, std::forward<Args>(args)...));
  }

 private:
  bool quiet_;
  mutable std::mutex mutex_;
};

double safe_cnr(const ImageD& image, const ImageI& regions) {
  try {
    return cnr(image, regions);
  } catch (const DegenerateError&) {
    return kNaN;
  } catch (const DomainError&) {
    return kNaN;
  }
}

double safe_ncorr(const ImageD& a, const ImageD& b) {
  try {
    return normalized_correlation(a, b);
  } catch (const DegenerateError&) {
    return kNaN;
  }
}

double normalized_mse(const ImageD& image, const ImageD& reference) {
  return (minmax_normalize(image) - reference).squaredNorm() / static_cast<double>(reference.size());
}

std::string csv_number(double v) { return std::isnan(v) ? "nan" : io::format_csv(v); }

SweepRow run_cell(const ExperimentConfig& base, const Phantom& phantom, double value, const std::string& method,
                  int run) {
  const bool hadamard = method.starts_with("hadamard");
  const std::string algo = method.substr(method.find('-') + 1);
  const std::size_t N = std::size_t{1} << (2 * base.basis_k);

  ExperimentConfig cfg = base;
  cfg.seed = base.seed + static_cast<std::uint64_t>(run);
  cfg.method = parse_method(algo);
  cfg.pattern_kind = hadamard ? PatternSource::Kind::hadamard : PatternSource::Kind::speckle;
  cfg.differential = hadamard && (algo == "dgi" || base.differential);

  const std::size_t m = base.sweep_axis == SweepAxis::exposures ? static_cast<std::size_t>(value)
                                                                : compressed_count(N, value);
  PatternSource src;
  src.kind = cfg.pattern_kind;
  if (hadamard) {
    src.basis = make_basis(cfg.basis_k, cfg.ordering);
    src.indices.assign(src.basis.permutation.begin(), src.basis.permutation.begin() + static_cast<std::ptrdiff_t>(m));
  } else {
    src.speckle_side = cfg.side();
    src.speckle_count = m;
    src.speckle_size_px = cfg.speckle_size;
    src.speckle_seed = cfg.seed;
  }
  const MeasurementSeries series = run_acquisition(src, phantom, cfg.imperfection, cfg.source_model(),
                                                   cfg.noise_model(), cfg.differential, 1);
  const ReconResult result = reconstruct(series, cfg);

  SweepRow row;
  row.value = value;
  row.exposures = m;
  row.method = method;
  row.seed = cfg.seed;
  row.cnr = safe_cnr(result.image, transmission_regions(phantom.transmission));
  row.mse = normalized_mse(result.image, phantom.transmission);
  row.ncorr = safe_ncorr(result.image, phantom.transmission);
  row.wall_time_s = base.sweep_timing ? result.wall_time_s : 0.0;
  return row;
}

// ---------------------------------------------------------------------------
// Command plumbing

struct Flag {
  std::string key;
  CLI::Option* option = nullptr;
  std::string value;
};

struct Command {
  CLI::App* app = nullptr;
  std::deque<Flag> flags;
  std::string config_path;
  std::string out;
};

void add_config_flags(Command& cmd, std::string_view command_name) {
  cmd.app->add_option("--config", cmd.config_path, "flat 'key = value' config file; flags override it");
  for (const auto& key : config_keys()) {
    Flag& f = cmd.flags.emplace_back();
    f.key = key.name;
    std::string names = "--" + key.name;
    if (key.name == "basis.k") names += ",--k";
    if (key.name == "basis.ordering") names += ",--ordering";
    if (key.name == "basis.rate") names += ",--rate";
    if (key.name == "recon.method" && command_name == "reconstruct") names += ",--method";
    f.option = cmd.app->add_option(names, f.value, key.help)->group("Config keys");
  }
}

ExperimentConfig build_config(const Command& cmd, ExperimentConfig cfg) {
  if (!cmd.config_path.empty()) apply_config_file(cfg, cmd.config_path);
  for (const auto& f : cmd.flags)
    if (f.option->count() > 0) set_config_value(cfg, f.key, f.value);
  return cfg;
}

std::filesystem::path output_path(const ExperimentConfig& cfg, const std::filesystem::path& p) {
  const std::filesystem::path full = p.is_absolute() ? p : cfg.output_dir / p;
  if (full.has_parent_path()) std::filesystem::create_directories(full.parent_path());
  return full;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

int cmd_basis(const ExperimentConfig& cfg, const std::string& out, const std::string& patterns_dir, const Log& log) {
  const HadamardBasis basis = make_basis(cfg.basis_k, cfg.ordering);
  const auto selected = compress(basis.permutation, cfg.rate);
  const auto path = output_path(cfg, out);
  std::ostringstream text;
  io::write_basis(text, basis, selected);
  write_text(path, text.str());
  log("basis k={} order={} wrote {} of {} indices to {}", cfg.basis_k, to_string(cfg.ordering), selected.size(),
      basis.size(), path.string());
  if (!patterns_dir.empty()) {
    const auto dir = output_path(cfg, patterns_dir);
    std::filesystem::create_directories(dir);
    for (std::size_t r = 0; r < selected.size(); ++r) {
      const PatternPair pair = make_pattern_pair(basis, selected[r], basis.side());
      io::write_pgm(dir / fmt::format("pattern_{:05d}_h{}.pgm", r, selected[r]), pair.positive);
    }
    log("wrote {} pattern images to {}", selected.size(), dir.string());
  }
  return ok;
}

int cmd_phantom(const ExperimentConfig& cfg, const std::string& out, const Log& log) {
  const Phantom phantom = generate(cfg.phantom_spec());
  const auto path = output_path(cfg, out);
  io::write_image(path, phantom.transmission);
  log("phantom {} {}x{} written to {}", to_string(cfg.phantom.kind), cfg.side(), cfg.side(), path.string());
  return ok;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out, const Log& log) {
  const PatternSource src = pattern_source(cfg);
  const Phantom phantom = generate(cfg.phantom_spec());
  const std::size_t step = std::max<std::size_t>(1, src.count() / 10);
  const auto progress = [&](std::size_t done, std::size_t total) {
    if (done % step == 0 || done == total) log("simulate: {}/{} exposures", done, total);
  };
  const MeasurementSeries series = run_acquisition(src, phantom, cfg.imperfection, cfg.source_model(),
                                                   cfg.noise_model(), cfg.differential, thread_count(), progress);
  const auto path = output_path(cfg, out);
  save_series(path, series, cfg);
  log("wrote {} records to {}", series.records.size(), path.string());
  return ok;
}

int cmd_reconstruct(const ExperimentConfig& cfg, const MeasurementSeries& series, const std::string& out,
                    const Log& log) {
  const ReconResult result = reconstruct(series, cfg);
  const Phantom phantom = generate(cfg.phantom_spec());
  const auto image_path = output_path(cfg, out + ".pgm");
  io::write_pgm(image_path, minmax_normalize(result.image));
  io::write_float_text(output_path(cfg, out + ".txt"), result.image);
  const auto format = [](double v) { return std::isnan(v) ? std::string("nan") : io::format_exact(v); };
  io::write_key_values(
      output_path(cfg, out + ".diag"),
      {{"method", to_string(cfg.method)},
       {"operator", to_string(cfg.op)},
       {"records", std::to_string(series.records.size())},
       {"seed", std::to_string(cfg.seed)},
       {"iterations", std::to_string(result.iterations)},
       {"converged", result.converged ? "true" : "false"},
       {"final_residual", format(result.final_residual)},
       {"objective_final", result.objective_trace.empty() ? "nan" : format(result.objective_trace.back())},
       {"wall_time_s", format(result.wall_time_s)},
       {"cnr", format(safe_cnr(result.image, transmission_regions(phantom.transmission)))},
       {"mse", format(normalized_mse(result.image, phantom.transmission))},
       {"ncorr", format(safe_ncorr(result.image, phantom.transmission))}});
  log("{}: {} iterations, converged={}, image written to {}", to_string(cfg.method), result.iterations,
      result.converged, image_path.string());
  return ok;
}

int cmd_evaluate(const std::string& image_path, const std::string& reference_path, const std::string& out) {
  const ImageD image = io::read_image(image_path);
  const ImageD reference = io::read_image(reference_path);
  if (image.rows() != reference.rows() || image.cols() != reference.cols())
    throw SizeError("evaluate: image and reference sizes differ");
  const ImageD normalized = minmax_normalize(image);
  const double mse = (normalized - reference).squaredNorm() / static_cast<double>(reference.size());
  const double psnr = mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
  const std::string text =
      fmt::format("mse,psnr,ncorr,cnr\n{},{},{},{}\n", csv_number(mse), csv_number(psnr),
                  csv_number(safe_ncorr(image, reference)), csv_number(safe_cnr(image, transmission_regions(reference))));
  if (out.empty()) std::cout << text << std::flush;
  else write_text(out, text);
  return ok;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& out, const Log& log) {
  const auto rows = run_sweep(cfg, thread_count(), !log.quiet());
  const auto path = output_path(cfg, out);
  write_text(path, sweep_csv(rows));
  auto summary_path = path;
  summary_path.replace_extension();
  summary_path += ".summary.csv";
  write_text(summary_path, summary_csv(summarize(rows)));
  log("sweep: {} rows written to {} and {}", rows.size(), path.string(), summary_path.string());
  return ok;
}

}  // namespace

// ---------------------------------------------------------------------------

ReconResult reconstruct(const MeasurementSeries& series, const ExperimentConfig& cfg) {
  switch (cfg.method) {
    case Method::gi: return correlation_gi(series);
    case Method::dgi: return differential_gi(series);
    case Method::tv:
    case Method::wfista: break;
  }
  const VectorD b = series.effective_buckets();
  const bool hadamard = series.patterns.kind == PatternSource::Kind::hadamard;
  const bool calibrated = cfg.op == OperatorChoice::calibrated || (cfg.op == OperatorChoice::automatic && hadamard);
  const bool ideal = series.imperfection.ideal() && !series.source;
  const MeasurementOperator op =
      calibrated ? build_operator(series.patterns.basis, series.patterns.indices, series.imperfection, series.source,
                                  cfg.phantom.pixel_pitch_um,
                                  ideal ? OperatorMode::ideal_hadamard : OperatorMode::explicit_patterns,
                                  series.differential)
                 : design_operator(series);
  if (cfg.method == Method::tv) return tv_admm(op, b, cfg.tv);
  return wavelet_fista(op, b, cfg.fista);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, int threads, bool verbose) {
  cfg.validate();
  cfg.validate_sweep();
  const Phantom phantom = generate(cfg.phantom_spec());
  struct Cell {
    double value;
    std::string method;
    int run;
  };
  std::vector<Cell> cells;
  for (double v : cfg.sweep_values)
    for (const auto& m : cfg.sweep_methods)
      for (int s = 0; s < cfg.sweep_seeds; ++s) cells.push_back({v, m, s});

  std::vector<SweepRow> rows(cells.size());
  const Log log(!verbose);
  std::mutex count_mutex;
  std::size_t done = 0;
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    rows[i] = run_cell(cfg, phantom, cells[i].value, cells[i].method, cells[i].run);
    std::size_t finished = 0;
    {
      std::lock_guard lock(count_mutex);
      finished = ++done;
    }
    log("sweep: cell {}/{} ({} at {}, seed {})", finished, cells.size(), rows[i].method, rows[i].value, rows[i].seed);
  });
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.value, a.method, a.seed) < std::tie(b.value, b.method, b.seed);
  });
  return rows;
}

std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummary> out;
  std::size_t i = 0;
  const auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair{mean, std::sqrt(var / static_cast<double>(v.size()))};
  };
  while (i < rows.size()) {
    std::size_t j = i;
    std::vector<double> cnrs, mses, ncorrs, times;
    while (j < rows.size() && rows[j].value == rows[i].value && rows[j].method == rows[i].method) {
      cnrs.push_back(rows[j].cnr);
      mses.push_back(rows[j].mse);
      ncorrs.push_back(rows[j].ncorr);
      times.push_back(rows[j].wall_time_s);
      ++j;
    }
    SweepSummary s;
    s.value = rows[i].value;
    s.exposures = rows[i].exposures;
    s.method = rows[i].method;
    s.seeds = static_cast<int>(j - i);
    std::tie(s.cnr_mean, s.cnr_std) = stats(cnrs);
    std::tie(s.mse_mean, s.mse_std) = stats(mses);
    std::tie(s.ncorr_mean, s.ncorr_std) = stats(ncorrs);
    s.wall_time_mean = stats(times).first;
    out.push_back(s);
    i = j;
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "value,M,method,seed,cnr,mse,ncorr,wall_time\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_number(r.value), r.exposures, r.method, r.seed,
                       csv_number(r.cnr), csv_number(r.mse), csv_number(r.ncorr), csv_number(r.wall_time_s));
  return out;
}

std::string summary_csv(const std::vector<SweepSummary>& rows) {
  std::string out = "value,M,method,seeds,cnr_mean,cnr_std,mse_mean,mse_std,ncorr_mean,ncorr_std,wall_time_mean\n";
  for (const auto& s : rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", csv_number(s.value), s.exposures, s.method, s.seeds,
                       csv_number(s.cnr_mean), csv_number(s.cnr_std), csv_number(s.mse_mean), csv_number(s.mse_std),
                       csv_number(s.ncorr_mean), csv_number(s.ncorr_std), csv_number(s.wall_time_mean));
  return out;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"ghostpixel: Hadamard-mask ghost imaging simulator and reconstruction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress logging");

  std::deque<Command> commands;
  const auto add = [&](const char* name, const char* description) -> Command& {
    Command& cmd = commands.emplace_back();
    cmd.app = app.add_subcommand(name, description);
    add_config_flags(cmd, name);
    return cmd;
  };

  Command& basis = add("basis", "write the ordered basis permutation (selected prefix)");
  basis.out = "basis.txt";
  basis.app->add_option("--out,-o", basis.out, "output file")->capture_default_str();
  std::string patterns_dir;
  basis.app->add_option("--patterns", patterns_dir, "also write the selected P+ masks as PGM files into this directory");

  Command& phantom = add("phantom", "emit a phantom image (.pgm, or float text for any other extension)");
  phantom.out = "phantom.pgm";
  phantom.app->add_option("--out,-o", phantom.out, "output image")->capture_default_str();

  Command& simulate = add("simulate", "simulate an acquisition and write the series file");
  simulate.out = "series.txt";
  simulate.app->add_option("--out,-o", simulate.out, "output series file")->capture_default_str();

  Command& recon = add("reconstruct", "reconstruct an image from a series file");
  recon.out = "recon";
  std::string series_path;
  recon.app->add_option("--series,-s", series_path, "input series file")->required();
  recon.app->add_option("--out,-o", recon.out, "output prefix (.pgm, .txt and .diag are written)")
      ->capture_default_str();

  Command& sweep = add("sweep", "run a parameter sweep and write per-seed and summary CSVs");
  sweep.out = "sweep.csv";
  sweep.app->add_option("--out,-o", sweep.out, "per-seed CSV; the summary goes to <stem>.summary.csv")
      ->capture_default_str();
  sweep.app->footer(kSweepColumns);

  Command& evaluate = add("evaluate", "compare an image with a reference (CSV: mse,psnr,ncorr,cnr)");
  std::string image_path, reference_path;
  evaluate.app->add_option("--image", image_path, "reconstructed image (PGM or float text)")->required();
  evaluate.app->add_option("--reference", reference_path, "reference image in [0, 1]")->required();
  evaluate.app->add_option("--out,-o", evaluate.out, "write the CSV here instead of stdout");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : usage;
  }

  const Log log(quiet);
  try {
    if (basis.app->parsed()) {
      const auto cfg = build_config(basis, {});
      cfg.validate();
      return cmd_basis(cfg, basis.out, patterns_dir, log);
    }
    if (phantom.app->parsed()) {
      const auto cfg = build_config(phantom, {});
      cfg.validate();
      return cmd_phantom(cfg, phantom.out, log);
    }
    if (simulate.app->parsed()) {
      const auto cfg = build_config(simulate, {});
      cfg.validate();
      return cmd_simulate(cfg, simulate.out, log);
    }
    if (recon.app->parsed()) {
      ExperimentConfig from_header;
      const MeasurementSeries series = load_series(series_path, from_header);
      const auto cfg = build_config(recon, from_header);
      cfg.validate();
      return cmd_reconstruct(cfg, series, recon.out, log);
    }
    if (sweep.app->parsed()) {
      const auto cfg = build_config(sweep, {});
      cfg.validate();
      return cmd_sweep(cfg, sweep.out, log);
    }
    if (evaluate.app->parsed()) return cmd_evaluate(image_path, reference_path, evaluate.out);
  } catch (const UsageError& e) {
    fmt::print(stderr, "ghostpixel: usage error: {}\n", e.what());
    return usage;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "ghostpixel: config inconsistency at {}\n", e.what());
    return config_inconsistent;
  } catch (const DomainError& e) {
    fmt::print(stderr, "ghostpixel: usage error: {}\n", e.what());
    return usage;
  } catch (const SizeError& e) {
    fmt::print(stderr, "ghostpixel: config inconsistency: {}\n", e.what());
    return config_inconsistent;
  } catch (const FormatError& e) {
    fmt::print(stderr, "ghostpixel: I/O error: {}\n", e.what());
    return io_error;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(stderr, "ghostpixel: I/O error: {}\n", e.what());
    return io_error;
  } catch (const std::exception& e) {
    fmt::print(stderr, "ghostpixel: error: {}\n", e.what());
    return 1;
  }
  return usage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args);
}

}  // namespace ghostpixel::cli
