#pragma once

#include "ghostpixel/core.hpp"
#include "ghostpixel/hadamard.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ghostpixel::io {

/// Decimal with 17 significant digits (round-trips doubles).
std::string format_exact(double v);
/// Decimal with 9 significant digits (CSV outputs).
std::string format_csv(double v);

/// Binary PGM, P5, maxval 65535, big-endian samples. Values are clamped to
/// [0, 1] and scaled to 0..65535.
void write_pgm(const std::filesystem::path& path, const ImageD& image);
/// Reads P5 files with any maxval up to 65535; samples are divided by maxval.
ImageD read_pgm(const std::filesystem::path& path);

/// Lossless text image: one row per line, space separated, 17 significant digits.
void write_float_text(const std::filesystem::path& path, const ImageD& image);
ImageD read_float_text(const std::filesystem::path& path);

/// Dispatches on extension: ".pgm" -> PGM, anything else -> float text.
void write_image(const std::filesystem::path& path, const ImageD& image);
/// Dispatches on content: files starting with "P5" are PGM.
ImageD read_image(const std::filesystem::path& path);

/// `HAD k=<k> order=<strategy>` followed by the selected indices, comma separated.
void write_basis(std::ostream& out, const HadamardBasis& basis, std::span<const std::size_t> selected);

struct BasisFile {
  int order_log2 = 0;
  Ordering ordering = Ordering::natural;
  std::vector<std::size_t> indices;
};
BasisFile read_basis(std::istream& in);

/// Line-oriented measurement file: `# key=value` header lines, then
/// `index,bucket_plus[,bucket_minus]` records.
struct SeriesText {
  std::map<std::string, std::string> header;
  struct Row {
    std::size_t index = 0;
    double plus = 0.0;
    std::optional<double> minus;
  };
  std::vector<Row> rows;
};

void write_series_text(std::ostream& out, const SeriesText& series);
SeriesText read_series_text(std::istream& in);

/// `key=value` diagnostics sidecar, one pair per line in the given order.
void write_key_values(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& kv);

}  // namespace ghostpixel::io
