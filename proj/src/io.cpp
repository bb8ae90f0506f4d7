#include "ghostpixel/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ghostpixel::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return in;
}

double parse_double(std::string_view s, const std::string& what) {
  // from_chars for double is available in libstdc++ 11
  double v = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) throw FormatError("malformed number '" + std::string(s) + "' in " + what);
  return v;
}

std::size_t parse_index(std::string_view s, const std::string& what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("malformed index '" + std::string(s) + "' in " + what);
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::string format_exact(double v) { return fmt::format("{:.17g}", v); }
std::string format_csv(double v) { return fmt::format("{:.9g}", v); }

void write_pgm(const std::filesystem::path& path, const ImageD& image) {
  auto out = open_out(path, std::ios::binary);
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n65535\n";
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(image.size()) * 2);
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image.data()[i], 0.0, 1.0);
    const auto s = static_cast<unsigned>(std::lround(v * 65535.0));
    bytes.push_back(static_cast<unsigned char>(s >> 8));
    bytes.push_back(static_cast<unsigned char>(s & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

ImageD read_pgm(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  const auto token = [&]() {
    std::string t;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    return t;
  };
  if (token() != "P5") throw FormatError("'" + path.string() + "' is not a binary PGM");
  const std::string ws = token(), hs = token(), ms = token();
  const auto w = static_cast<Eigen::Index>(parse_index(ws, path.string()));
  const auto h = static_cast<Eigen::Index>(parse_index(hs, path.string()));
  const std::size_t maxval = parse_index(ms, path.string());
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw FormatError("bad PGM header in '" + path.string() + "'");
  const int bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w * h * bytes_per));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw FormatError("truncated PGM '" + path.string() + "'");
  ImageD img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const unsigned s = bytes_per == 2 ? (unsigned{raw[2 * k]} << 8) | raw[2 * k + 1] : raw[k];
    img.data()[i] = static_cast<double>(s) / static_cast<double>(maxval);
  }
  return img;
}

void write_float_text(const std::filesystem::path& path, const ImageD& image) {
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      if (c) out << ' ';
      out << format_exact(image(r, c));
    }
    out << '\n';
  }
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

ImageD read_float_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) row.push_back(parse_double(tok, path.string()));
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("ragged rows in '" + path.string() + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw FormatError("empty image file '" + path.string() + "'");
  ImageD img(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) img(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return img;
}

void write_image(const std::filesystem::path& path, const ImageD& image) {
  if (path.extension() == ".pgm") write_pgm(path, image);
  else write_float_text(path, image);
}

ImageD read_image(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() == 2 && magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
  return read_float_text(path);
}

void write_basis(std::ostream& out, const HadamardBasis& basis, std::span<const std::size_t> selected) {
  out << "HAD k=" << basis.order_log2 << " order=" << to_string(basis.ordering) << '\n';
  for (std::size_t i = 0; i < selected.size(); ++i) out << (i ? "," : "") << selected[i];
  out << '\n';
}

BasisFile read_basis(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw FormatError("basis file: missing header");
  BasisFile out;
  std::istringstream hs(header);
  std::string magic, k, order;
  hs >> magic >> k >> order;
  if (magic != "HAD" || k.rfind("k=", 0) != 0 || order.rfind("order=", 0) != 0)
    throw FormatError("basis file: malformed header '" + header + "'");
  out.order_log2 = static_cast<int>(parse_index(std::string_view(k).substr(2), "basis header"));
  out.ordering = parse_ordering(std::string_view(order).substr(6));
  std::string line;
  if (std::getline(in, line) && !line.empty())
    for (auto part : split(line, ',')) out.indices.push_back(parse_index(part, "basis file"));
  return out;
}

void write_series_text(std::ostream& out, const SeriesText& series) {
  for (const auto& [key, value] : series.header) out << "# " << key << '=' << value << '\n';
  for (const auto& row : series.rows) {
    out << row.index << ',' << format_exact(row.plus);
    if (row.minus) out << ',' << format_exact(*row.minus);
    out << '\n';
  }
}

SeriesText read_series_text(std::istream& in) {
  SeriesText out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "series line " + std::to_string(line_no);
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      out.header[key] = line.substr(eq + 1);
      continue;
    }
    const auto parts = split(line, ',');
    if (parts.size() < 2 || parts.size() > 3) throw FormatError("malformed record at " + where);
    SeriesText::Row row;
    row.index = parse_index(parts[0], where);
    row.plus = parse_double(parts[1], where);
    if (parts.size() == 3) row.minus = parse_double(parts[2], where);
    out.rows.push_back(row);
  }
  if (in.bad()) throw FormatError("read error in series file");
  return out;
}

void write_key_values(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
  auto out = open_out(path);
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

}  // namespace ghostpixel::io
