#include "ghostpixel/config.hpp"
#include "ghostpixel/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>

namespace ghostpixel {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw UsageError(fmt::format("invalid value '{}' for {}: {}", value, key, why));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "expected a number");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "expected an integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "expected true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto pos = v.find(',', start);
    std::string item = trim(std::string_view(v).substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string num(double v) { return fmt::format("{}", v); }

template <class T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, std::string>) out += items[i];
    else out += num(items[i]);
  }
  return out;
}

// Typed key builders. `check` validates the parsed value and returns an
// error message, or nullptr when it is acceptable.
template <class Field>
ConfigKey real_key(std::string name, std::string help, Field field, const char* (*check)(double) = nullptr) {
  return {name, std::move(help),
          [=](ExperimentConfig& c, const std::string& v) {
            const double x = to_double(name, v);
            if (check)
              if (const char* why = check(x)) bad_value(name, v, why);
            field(c) = x;
          },
          [=](const ExperimentConfig& c) -> std::optional<std::string> {
            return num(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <class Field>
ConfigKey int_key(std::string name, std::string help, Field field, long long lo, long long hi) {
  return {name, std::move(help),
          [=](ExperimentConfig& c, const std::string& v) {
            const long long x = to_int(name, v);
            if (x < lo || x > hi) bad_value(name, v, fmt::format("must be in [{}, {}]", lo, hi));
            field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(x);
          },
          [=](const ExperimentConfig& c) -> std::optional<std::string> {
            return std::to_string(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <class Field>
ConfigKey bool_key(std::string name, std::string help, Field field) {
  return {name, std::move(help),
          [=](ExperimentConfig& c, const std::string& v) { field(c) = to_bool(name, v); },
          [=](const ExperimentConfig& c) -> std::optional<std::string> {
            return field(const_cast<ExperimentConfig&>(c)) ? "true" : "false";
          }};
}

// Optional numeric phantom parameter; empty value clears it.
ConfigKey phantom_param(const std::string& param, std::string help) {
  const std::string name = "phantom." + param;
  return {name, std::move(help),
          [=](ExperimentConfig& c, const std::string& v) {
            if (v.empty()) c.phantom.parameters.erase(param);
            else c.phantom.parameters[param] = to_double(name, v);
          },
          [=](const ExperimentConfig& c) -> std::optional<std::string> {
            const auto it = c.phantom.parameters.find(param);
            if (it == c.phantom.parameters.end()) return std::nullopt;
            return num(it->second);
          }};
}

const char* positive(double x) { return x > 0.0 ? nullptr : "must be > 0"; }
const char* non_negative(double x) { return x >= 0.0 ? nullptr : "must be >= 0"; }
const char* unit_interval(double x) { return x > 0.0 && x <= 1.0 ? nullptr : "must be in (0, 1]"; }

std::string canonical_sweep_method(const std::string& m) {
  if (m == "hadamard") return "hadamard-gi";
  if (m == "speckle") return "speckle-gi";
  for (const char* known : {"hadamard-gi", "hadamard-dgi", "hadamard-tv", "hadamard-wfista", "speckle-gi",
                            "speckle-tv", "speckle-wfista"})
    if (m == known) return m;
  throw UsageError("unknown sweep method '" + m + "'");
}

std::vector<ConfigKey> build_keys() {
  using C = ExperimentConfig;
  std::vector<ConfigKey> keys;
  keys.push_back(int_key("basis.k", "grid side 2^k, N = 4^k basis patterns",
                         [](C& c) -> int& { return c.basis_k; }, 0, kMaxBasisOrder));
  keys.push_back({"basis.ordering", "natural | sequency | connectivity-ascending",
                  [](C& c, const std::string& v) {
                    try {
                      c.ordering = parse_ordering(v);
                    } catch (const DomainError& e) {
                      bad_value("basis.ordering", v, "unknown ordering");
                    }
                  },
                  [](const C& c) -> std::optional<std::string> { return to_string(c.ordering); }});
  keys.push_back(real_key("basis.rate", "sampling rate M/N in (0, 1]", [](C& c) -> double& { return c.rate; },
                          unit_interval));
  keys.push_back({"pattern.kind", "hadamard | speckle",
                  [](C& c, const std::string& v) {
                    if (v == "hadamard") c.pattern_kind = PatternSource::Kind::hadamard;
                    else if (v == "speckle") c.pattern_kind = PatternSource::Kind::speckle;
                    else bad_value("pattern.kind", v, "expected hadamard or speckle");
                  },
                  [](const C& c) -> std::optional<std::string> {
                    return c.pattern_kind == PatternSource::Kind::hadamard ? "hadamard" : "speckle";
                  }});
  keys.push_back(int_key("speckle.count", "number of speckle exposures",
                         [](C& c) -> std::size_t& { return c.speckle_count; }, 2, 10'000'000));
  keys.push_back(int_key("speckle.size", "speckle grain size in pixels",
                         [](C& c) -> int& { return c.speckle_size; }, 1, 1 << 20));
  keys.push_back(bool_key("acquisition.differential", "expose complementary pattern pairs",
                          [](C& c) -> bool& { return c.differential; }));

  keys.push_back({"phantom.kind", "letters | gear | semicylinder_gap | knife_edge | bar_target | uniform",
                  [](C& c, const std::string& v) {
                    try {
                      c.phantom.kind = parse_phantom_kind(v);
                    } catch (const DomainError&) {
                      bad_value("phantom.kind", v, "unknown phantom");
                    }
                  },
                  [](const C& c) -> std::optional<std::string> { return to_string(c.phantom.kind); }});
  keys.push_back(int_key("phantom.side", "phantom side in pixels; 0 follows the basis",
                         [](C& c) -> Eigen::Index& { return c.phantom_side; }, 0, 1 << 20));
  keys.push_back(real_key("phantom.pitch_um", "pixel pitch in micrometres",
                          [](C& c) -> double& { return c.phantom.pixel_pitch_um; }, positive));
  keys.push_back({"phantom.text", "letters phantom text",
                  [](C& c, const std::string& v) { c.phantom.text = v; },
                  [](const C& c) -> std::optional<std::string> { return c.phantom.text; }});
  keys.push_back(phantom_param("margin", "letters: margin in pixels"));
  keys.push_back(phantom_param("teeth", "gear: number of teeth"));
  keys.push_back(phantom_param("radius", "gear: root radius in pixels"));
  keys.push_back(phantom_param("tooth_height", "gear: tooth height in pixels"));
  keys.push_back(phantom_param("gap_px", "semicylinder_gap: gap width in pixels"));
  keys.push_back(phantom_param("position", "knife_edge: edge position in pixels"));
  keys.push_back(phantom_param("orientation", "knife_edge: 0 vertical, 1 horizontal"));
  keys.push_back(phantom_param("period", "bar_target: bar period in pixels"));
  keys.push_back(phantom_param("value", "uniform: transmission value"));

  keys.push_back(real_key("imperfection.modulation_depth", "mask modulation depth D_r in (0, 1]",
                          [](C& c) -> double& { return c.imperfection.modulation_depth; }, unit_interval));
  keys.push_back(real_key("imperfection.edge_blur_sigma", "mask edge blur in pixels",
                          [](C& c) -> double& { return c.imperfection.edge_blur_sigma; }, non_negative));
  keys.push_back(real_key("imperfection.jitter_sigma", "pattern placement jitter in pixels",
                          [](C& c) -> double& { return c.imperfection.jitter_sigma; }, non_negative));
  keys.push_back(bool_key("source.enabled", "apply extended-source penumbral blur",
                          [](C& c) -> bool& { return c.source_enabled; }));
  keys.push_back(real_key("source.fwhm_x_um", "source FWHM along x",
                          [](C& c) -> double& { return c.source.fwhm_x_um; }, positive));
  keys.push_back(real_key("source.fwhm_y_um", "source FWHM along y",
                          [](C& c) -> double& { return c.source.fwhm_y_um; }, positive));
  keys.push_back(real_key("source.source_to_mask_mm", "source to mask distance",
                          [](C& c) -> double& { return c.source.source_to_mask_mm; }, positive));
  keys.push_back(real_key("source.mask_to_object_mm", "mask to object distance",
                          [](C& c) -> double& { return c.source.mask_to_object_mm; }, positive));
  keys.push_back(real_key("noise.photon_scale", "photons per unit bucket signal; 0 disables shot noise",
                          [](C& c) -> double& { return c.noise.photon_scale; }, non_negative));
  keys.push_back(real_key("noise.read_noise_sigma", "Gaussian read noise",
                          [](C& c) -> double& { return c.noise.read_noise_sigma; }, non_negative));
  keys.push_back(real_key("noise.dark_current", "constant dark offset",
                          [](C& c) -> double& { return c.noise.dark_current; }, non_negative));

  keys.push_back({"recon.method", "gi | dgi | tv | wfista",
                  [](C& c, const std::string& v) {
                    try {
                      c.method = parse_method(v);
                    } catch (const DomainError&) {
                      bad_value("recon.method", v, "expected gi, dgi, tv or wfista");
                    }
                  },
                  [](const C& c) -> std::optional<std::string> { return to_string(c.method); }});
  keys.push_back({"recon.operator",
                  "tv/wfista operator: auto | design (nominal patterns) | calibrated (rendered mask model)",
                  [](C& c, const std::string& v) {
                    if (v == "auto") c.op = OperatorChoice::automatic;
                    else if (v == "design") c.op = OperatorChoice::design;
                    else if (v == "calibrated") c.op = OperatorChoice::calibrated;
                    else bad_value("recon.operator", v, "expected auto, design or calibrated");
                  },
                  [](const C& c) -> std::optional<std::string> { return to_string(c.op); }});
  keys.push_back(real_key("recon.mu", "tv: fidelity weight", [](C& c) -> double& { return c.tv.mu; }, positive));
  keys.push_back(real_key("recon.beta", "tv: gradient-split penalty", [](C& c) -> double& { return c.tv.beta; },
                          positive));
  keys.push_back(real_key("recon.lambda", "wfista: wavelet l1 weight",
                          [](C& c) -> double& { return c.fista.lambda; }, non_negative));
  keys.push_back(int_key("recon.levels", "wfista: Haar levels", [](C& c) -> int& { return c.fista.levels; }, 1, 20));
  keys.push_back({"recon.max_iters", "iteration cap for tv and wfista",
                  [](C& c, const std::string& v) {
                    const long long x = to_int("recon.max_iters", v);
                    if (x < 1 || x > 1'000'000) bad_value("recon.max_iters", v, "must be in [1, 1000000]");
                    c.tv.max_iters = c.fista.max_iters = static_cast<int>(x);
                  },
                  [](const C& c) -> std::optional<std::string> { return std::to_string(c.tv.max_iters); }});
  keys.push_back({"recon.tol", "relative-change stopping tolerance",
                  [](C& c, const std::string& v) {
                    const double x = to_double("recon.tol", v);
                    if (x < 0.0) bad_value("recon.tol", v, "must be >= 0");
                    c.tv.tol = c.fista.tol = x;
                  },
                  [](const C& c) -> std::optional<std::string> { return num(c.tv.tol); }});

  keys.push_back({"sweep.axis", "exposures | rate",
                  [](C& c, const std::string& v) {
                    if (v == "exposures") c.sweep_axis = SweepAxis::exposures;
                    else if (v == "rate") c.sweep_axis = SweepAxis::rate;
                    else bad_value("sweep.axis", v, "expected exposures or rate");
                  },
                  [](const C& c) -> std::optional<std::string> {
                    return c.sweep_axis == SweepAxis::exposures ? "exposures" : "rate";
                  }});
  keys.push_back({"sweep.values", "comma-separated exposure counts or rates",
                  [](C& c, const std::string& v) {
                    std::vector<double> values;
                    for (const auto& item : split_list(v)) values.push_back(to_double("sweep.values", item));
                    if (values.empty()) bad_value("sweep.values", v, "empty list");
                    c.sweep_values = std::move(values);
                  },
                  [](const C& c) -> std::optional<std::string> { return join(c.sweep_values); }});
  keys.push_back({"sweep.methods",
                  "comma-separated: hadamard[-gi], hadamard-dgi, hadamard-tv, hadamard-wfista, speckle[-gi], "
                  "speckle-tv, speckle-wfista",
                  [](C& c, const std::string& v) {
                    std::vector<std::string> methods;
                    for (const auto& item : split_list(v)) {
                      const std::string m = canonical_sweep_method(item);
                      if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
                    }
                    if (methods.empty()) bad_value("sweep.methods", v, "empty list");
                    c.sweep_methods = std::move(methods);
                  },
                  [](const C& c) -> std::optional<std::string> { return join(c.sweep_methods); }});
  keys.push_back(int_key("sweep.seeds", "number of seeds per cell (seed, seed + 1, ...)",
                         [](C& c) -> int& { return c.sweep_seeds; }, 1, 100000));
  keys.push_back(bool_key("sweep.timing", "record wall time (makes CSVs run-dependent)",
                          [](C& c) -> bool& { return c.sweep_timing; }));

  keys.push_back({"output.dir", "directory for relative output paths",
                  [](C& c, const std::string& v) { c.output_dir = v.empty() ? "." : v; },
                  [](const C& c) -> std::optional<std::string> { return c.output_dir.string(); }});
  keys.push_back({"seed", "base random seed",
                  [](C& c, const std::string& v) {
                    std::uint64_t x = 0;
                    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
                    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value("seed", v, "expected an unsigned integer");
                    c.seed = x;
                  },
                  [](const C& c) -> std::optional<std::string> { return std::to_string(c.seed); }});
  std::sort(keys.begin(), keys.end(), [](const ConfigKey& a, const ConfigKey& b) { return a.name < b.name; });
  return keys;
}

}  // namespace

PhantomSpec ExperimentConfig::phantom_spec() const {
  PhantomSpec spec = phantom;
  spec.side = side();
  return spec;
}

NoiseModel ExperimentConfig::noise_model() const {
  NoiseModel n = noise;
  n.seed = seed;
  return n;
}

std::string to_string(OperatorChoice c) {
  switch (c) {
    case OperatorChoice::automatic: return "auto";
    case OperatorChoice::design: return "design";
    case OperatorChoice::calibrated: return "calibrated";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  const Eigen::Index n = side();
  if (phantom_side != 0 && phantom_side != n)
    throw ConfigError("phantom.side", fmt::format("{} does not match basis side 2^{} = {}", phantom_side, basis_k, n));
  if (pattern_kind == PatternSource::Kind::speckle && differential)
    throw ConfigError("acquisition.differential", "differential pairs require hadamard patterns");
  if (pattern_kind == PatternSource::Kind::speckle && speckle_size > n)
    throw ConfigError("speckle.size", fmt::format("grain {} larger than the {} px field", speckle_size, n));
  if (method == Method::wfista && fista.levels > basis_k)
    throw ConfigError("recon.levels", fmt::format("side {} is not divisible by 2^{}", n, fista.levels));
  if (method == Method::dgi && !(pattern_kind == PatternSource::Kind::hadamard && differential))
    throw ConfigError("recon.method", "dgi requires a differential hadamard acquisition");
  if (op == OperatorChoice::calibrated && pattern_kind != PatternSource::Kind::hadamard)
    throw ConfigError("recon.operator", "calibrated operator requires hadamard patterns");
}

void ExperimentConfig::validate_sweep() const {
  const Eigen::Index n = side();
  const bool speckle_solver = std::any_of(sweep_methods.begin(), sweep_methods.end(), [](const std::string& m) {
    return m == "speckle-tv" || m == "speckle-wfista";
  });
  if (op == OperatorChoice::calibrated && speckle_solver)
    throw ConfigError("recon.operator", "calibrated operator requires hadamard patterns");
  const bool sweep_wavelets = std::any_of(sweep_methods.begin(), sweep_methods.end(),
                                          [](const std::string& m) { return m.ends_with("wfista"); });
  if (sweep_wavelets && fista.levels > basis_k)
    throw ConfigError("recon.levels", fmt::format("side {} is not divisible by 2^{}", n, fista.levels));
  const std::size_t N = std::size_t{1} << (2 * basis_k);
  for (double v : sweep_values) {
    if (sweep_axis == SweepAxis::rate) {
      if (!(v > 0.0 && v <= 1.0)) throw ConfigError("sweep.values", fmt::format("rate {} not in (0, 1]", v));
      continue;
    }
    if (v != std::floor(v) || v < 2.0)
      throw ConfigError("sweep.values", fmt::format("exposure count {} is not an integer >= 2", v));
    const bool any_hadamard = std::any_of(sweep_methods.begin(), sweep_methods.end(),
                                          [](const std::string& m) { return m.starts_with("hadamard"); });
    if (any_hadamard && v > static_cast<double>(N))
      throw ConfigError("sweep.values", fmt::format("{} exposures exceed the {} hadamard patterns", v, N));
  }
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const ConfigKey* k = find_config_key(key);
  if (!k) throw UsageError("unknown config key '" + key + "'");
  k->set(cfg, trim(value));
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file '" + path.string() + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError(fmt::format("{}:{}: expected 'key = value'", path.string(), line_no));
    set_config_value(cfg, trim(std::string_view(t).substr(0, eq)), t.substr(eq + 1));
  }
}

std::map<std::string, std::string> config_dump(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& k : config_keys())
    if (auto v = k.get(cfg)) out[k.name] = *v;
  return out;
}

PatternSource pattern_source(const ExperimentConfig& cfg) {
  PatternSource src;
  src.kind = cfg.pattern_kind;
  if (src.kind == PatternSource::Kind::hadamard) {
    src.basis = make_basis(cfg.basis_k, cfg.ordering);
    const auto prefix = compress(src.basis.permutation, cfg.rate);
    src.indices.assign(prefix.begin(), prefix.end());
  } else {
    src.speckle_side = cfg.side();
    src.speckle_count = cfg.speckle_count;
    src.speckle_size_px = cfg.speckle_size;
    src.speckle_seed = cfg.seed;
  }
  return src;
}

void save_series(const std::filesystem::path& path, const MeasurementSeries& series, const ExperimentConfig& cfg) {
  io::SeriesText text;
  text.header = config_dump(cfg);
  text.header["format"] = "ghostpixel-series-1";
  text.header["records"] = std::to_string(series.records.size());
  text.rows.reserve(series.records.size());
  for (const auto& rec : series.records) text.rows.push_back({rec.pattern_index, rec.bucket_plus, rec.bucket_minus});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  io::write_series_text(out, text);
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

MeasurementSeries load_series(const std::filesystem::path& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open series file '" + path.string() + "'");
  const io::SeriesText text = io::read_series_text(in);
  const auto fmt_it = text.header.find("format");
  if (fmt_it == text.header.end() || fmt_it->second != "ghostpixel-series-1")
    throw FormatError("'" + path.string() + "' is not a ghostpixel series file");
  for (const auto& [key, value] : text.header) {
    if (key == "format" || key == "records") continue;
    try {
      set_config_value(cfg, key, value);
    } catch (const UsageError& e) {
      throw FormatError("series header: " + std::string(e.what()));
    }
  }
  if (text.rows.empty()) throw FormatError("series file '" + path.string() + "' has no records");

  MeasurementSeries series;
  series.imperfection = cfg.imperfection;
  series.source = cfg.source_model();
  series.noise = cfg.noise_model();
  series.differential = cfg.differential;
  series.patterns.kind = cfg.pattern_kind;
  if (cfg.pattern_kind == PatternSource::Kind::hadamard) {
    series.patterns.basis = make_basis(cfg.basis_k, cfg.ordering);
  } else {
    series.patterns.speckle_side = cfg.side();
    series.patterns.speckle_count = text.rows.size();
    series.patterns.speckle_size_px = cfg.speckle_size;
    series.patterns.speckle_seed = cfg.seed;
  }
  const std::size_t N = series.patterns.basis.size();
  for (std::size_t r = 0; r < text.rows.size(); ++r) {
    const auto& row = text.rows[r];
    if (row.minus.has_value() != cfg.differential)
      throw FormatError(fmt::format("series record {}: bucket_minus {} for a {} series", r,
                                    row.minus ? "present" : "missing", cfg.differential ? "differential" : "single-mask"));
    if (cfg.pattern_kind == PatternSource::Kind::hadamard) {
      if (row.index >= N) throw FormatError(fmt::format("series record {}: pattern index {} out of range", r, row.index));
      series.patterns.indices.push_back(row.index);
    } else if (row.index != r) {
      throw FormatError(fmt::format("series record {}: speckle index {} out of sequence", r, row.index));
    }
    series.records.push_back({row.index, row.plus, row.minus});
  }
  return series;
}

}  // namespace ghostpixel
