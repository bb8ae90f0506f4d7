#pragma once

#include "ghostpixel/hadamard.hpp"
#include "ghostpixel/optics.hpp"
#include "ghostpixel/phantoms.hpp"
#include "ghostpixel/reconstruct.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ghostpixel {

/// Invalid flag or config value (exit code 2).
struct UsageError : Error {
  using Error::Error;
};

/// Values that are individually valid but inconsistent with each other
/// (exit code 4). `field` is the dotted key at fault.
struct ConfigError : Error {
  ConfigError(std::string field_path, const std::string& what)
      : Error(field_path + ": " + what), field(std::move(field_path)) {}
  std::string field;
};

enum class SweepAxis { exposures, rate };
/// Operator for tv/wfista: `design` uses the nominal patterns, `calibrated`
/// the rendered imperfect masks, `automatic` picks calibrated for Hadamard
/// series and design for speckle.
enum class OperatorChoice { automatic, design, calibrated };
std::string to_string(OperatorChoice c);

struct ExperimentConfig {
  // basis
  int basis_k = 5;
  Ordering ordering = Ordering::connectivity_ascending;
  double rate = 1.0;
  // patterns and acquisition
  PatternSource::Kind pattern_kind = PatternSource::Kind::hadamard;
  std::size_t speckle_count = 1024;
  int speckle_size = 1;
  bool differential = false;
  // physics
  PhantomSpec phantom = [] {
    PhantomSpec spec;
    spec.kind = PhantomKind::letters;
    return spec;
  }();
  Eigen::Index phantom_side = 0;  // 0: follow the basis (2^k)
  ImperfectionModel imperfection;
  bool source_enabled = false;
  SourceModel source;
  NoiseModel noise;  // noise.seed mirrors `seed`
  // reconstruction
  Method method = Method::gi;
  OperatorChoice op = OperatorChoice::automatic;
  TvParams tv;
  FistaParams fista = [] {
    FistaParams p;
    p.lambda = 3.0;
    return p;
  }();
  // sweep
  SweepAxis sweep_axis = SweepAxis::exposures;
  std::vector<double> sweep_values{128, 512, 1024};
  std::vector<std::string> sweep_methods{"hadamard-gi", "speckle-gi"};
  int sweep_seeds = 1;
  bool sweep_timing = false;
  // output
  std::filesystem::path output_dir = ".";
  std::uint64_t seed = 0;

  Eigen::Index side() const { return Eigen::Index{1} << basis_k; }
  std::optional<SourceModel> source_model() const {
    return source_enabled ? std::optional<SourceModel>(source) : std::nullopt;
  }
  PhantomSpec phantom_spec() const;
  NoiseModel noise_model() const;

  /// Cross-field checks; throws ConfigError naming the offending key.
  void validate() const;
  /// Checks of the sweep.* keys against the rest of the config.
  void validate_sweep() const;
};

/// One dotted key. `get` returns nullopt for optional keys that are unset.
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();
const ConfigKey* find_config_key(std::string_view name);

/// Sets one key from text; UsageError on unknown keys or invalid values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Applies a flat `key = value` file (`#` starts a comment line).
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Every set key with its current value, sorted by key.
std::map<std::string, std::string> config_dump(const ExperimentConfig& cfg);

/// Series file round trip. The header is the full config dump, so a series
/// file is self-describing; records carry the pattern indices.
void save_series(const std::filesystem::path& path, const MeasurementSeries& series, const ExperimentConfig& cfg);
MeasurementSeries load_series(const std::filesystem::path& path, ExperimentConfig& cfg);

/// Pattern source described by the config (Hadamard prefix at `rate`, or
/// `speckle_count` speckle fields).
PatternSource pattern_source(const ExperimentConfig& cfg);

}  // namespace ghostpixel
