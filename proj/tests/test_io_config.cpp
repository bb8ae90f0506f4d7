#include "ghostpixel/config.hpp"
#include "ghostpixel/io.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ghostpixel;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ghostpixel_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST_SUITE("io_config") {

TEST_CASE("number formatting round trips") {
  test::Gen gen(401);
  for (int i = 0; i < 100; ++i) {
    const double v = gen.normal() * std::pow(10.0, gen.integer(-30, 30));
    CHECK(std::stod(io::format_exact(v)) == v);
  }
  CHECK(io::format_csv(0.1) == "0.1");
}

TEST_CASE("PGM round trip") {
  test::Gen gen(402);
  const ImageD img = gen.image(5, 7, 0.0, 1.0);
  const auto path = scratch("a.pgm");
  io::write_pgm(path, img);
  const ImageD back = io::read_pgm(path);
  REQUIRE(back.rows() == 5);
  REQUIRE(back.cols() == 7);
  CHECK((back - img).cwiseAbs().maxCoeff() <= 0.5 / 65535.0 + 1e-12);
  CHECK(fs::file_size(path) == std::string("P5\n7 5\n65535\n").size() + 5 * 7 * 2);

  ImageD clamp(1, 2);
  clamp << -1.0, 2.0;
  io::write_pgm(path, clamp);
  const ImageD c = io::read_pgm(path);
  CHECK(c(0, 0) == 0.0);
  CHECK(c(0, 1) == 1.0);

  // 8-bit file with a comment line
  write_text(path, std::string("P5\n# note\n2 1\n255\n") + char(0) + char(static_cast<unsigned char>(255)));
  const ImageD b = io::read_pgm(path);
  CHECK(b(0, 0) == 0.0);
  CHECK(b(0, 1) == 1.0);

  write_text(path, "P2\n1 1\n255\n0\n");
  CHECK_THROWS_AS(io::read_pgm(path), FormatError);
  write_text(path, std::string("P5\n2 2\n255\n") + "ab");
  CHECK_THROWS_AS(io::read_pgm(path), FormatError);
}

TEST_CASE("float text round trip and dispatch") {
  test::Gen gen(403);
  const ImageD img = gen.image(4, 6);
  const auto path = scratch("a.txt");
  io::write_image(path, img);
  CHECK(io::read_image(path) == img);
  io::write_image(scratch("b.pgm"), ImageD::Constant(2, 2, 0.5));
  CHECK(io::read_image(scratch("b.pgm")).rows() == 2);
  write_text(path, "1 2 3\n4 5\n");
  CHECK_THROWS_AS(io::read_float_text(path), FormatError);
  CHECK_THROWS_AS(io::read_image(scratch("does_not_exist.txt")), FormatError);
}

TEST_CASE("basis file round trip") {
  const auto basis = make_basis(3, Ordering::sequency);
  const auto sel = compress(basis.permutation, 0.25);
  std::stringstream ss;
  io::write_basis(ss, basis, sel);
  CHECK(ss.str().rfind("HAD k=3 order=sequency\n", 0) == 0);
  const auto back = io::read_basis(ss);
  CHECK(back.order_log2 == 3);
  CHECK(back.ordering == Ordering::sequency);
  CHECK(back.indices == sel);
  std::istringstream bad("HAD k=x order=natural\n1,2\n");
  CHECK_THROWS_AS(io::read_basis(bad), FormatError);
}

TEST_CASE("series text round trip") {
  io::SeriesText s;
  s.header["seed"] = "4";
  s.rows.push_back({3, 0.125, std::nullopt});
  s.rows.push_back({9, 1e-17, -2.5});
  std::stringstream ss;
  io::write_series_text(ss, s);
  const auto back = io::read_series_text(ss);
  CHECK(back.header.at("seed") == "4");
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].index == 3);
  CHECK_FALSE(back.rows[0].minus.has_value());
  CHECK(back.rows[1].plus == 1e-17);
  CHECK(*back.rows[1].minus == -2.5);
  std::istringstream bad("# a=1\n1,x\n");
  CHECK_THROWS_AS(io::read_series_text(bad), FormatError);
}

TEST_CASE("config keys and file") {
  ExperimentConfig cfg;
  set_config_value(cfg, "basis.k", "6");
  set_config_value(cfg, "basis.ordering", "natural");
  set_config_value(cfg, "imperfection.modulation_depth", "0.75");
  set_config_value(cfg, "sweep.methods", "hadamard, speckle-gi, hadamard");
  CHECK(cfg.basis_k == 6);
  CHECK(cfg.ordering == Ordering::natural);
  CHECK(cfg.imperfection.modulation_depth == 0.75);
  CHECK(cfg.sweep_methods == std::vector<std::string>{"hadamard-gi", "speckle-gi"});
  CHECK_THROWS_AS(set_config_value(cfg, "basis.k", "-1"), UsageError);
  CHECK_THROWS_AS(set_config_value(cfg, "basis.rate", "1.5"), UsageError);
  CHECK_THROWS_AS(set_config_value(cfg, "no.such.key", "1"), UsageError);
  CHECK_THROWS_AS(set_config_value(cfg, "recon.method", "magic"), UsageError);

  const auto path = scratch("exp.conf");
  write_text(path, "# comment\nbasis.k = 4\n\nnoise.photon_scale = 1e4\nrecon.max_iters = 77\n");
  apply_config_file(cfg, path);
  CHECK(cfg.basis_k == 4);
  CHECK(cfg.noise.photon_scale == 1e4);
  CHECK(cfg.tv.max_iters == 77);
  CHECK(cfg.fista.max_iters == 77);
  write_text(path, "basis.k 4\n");
  CHECK_THROWS_AS(apply_config_file(cfg, path), UsageError);

  // the dump reproduces the config
  ExperimentConfig copy;
  for (const auto& [k, v] : config_dump(cfg)) set_config_value(copy, k, v);
  CHECK(config_dump(copy) == config_dump(cfg));
}

TEST_CASE("cross-field validation names the offending key") {
  const auto field_of = [](const ExperimentConfig& cfg) -> std::string {
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      return e.field;
    }
    return "";
  };
  ExperimentConfig cfg;
  CHECK(field_of(cfg) == "");
  cfg.phantom_side = 64;
  CHECK(field_of(cfg) == "phantom.side");
  cfg.phantom_side = 32;
  CHECK(field_of(cfg) == "");

  ExperimentConfig sp;
  sp.pattern_kind = PatternSource::Kind::speckle;
  sp.differential = true;
  CHECK(field_of(sp) == "acquisition.differential");

  ExperimentConfig dgi;
  dgi.method = Method::dgi;
  CHECK(field_of(dgi) == "recon.method");
  dgi.differential = true;
  CHECK(field_of(dgi) == "");

  ExperimentConfig sweep;
  const auto sweep_field = [](const ExperimentConfig& cfg) -> std::string {
    try {
      cfg.validate_sweep();
    } catch (const ConfigError& e) {
      return e.field;
    }
    return "";
  };
  sweep.sweep_values = {2048};
  CHECK(field_of(sweep) == "");
  CHECK(sweep_field(sweep) == "sweep.values");
  sweep.sweep_methods = {"speckle-gi"};
  CHECK(sweep_field(sweep) == "");
  sweep.sweep_axis = SweepAxis::rate;
  sweep.sweep_values = {0.5, 1.2};
  CHECK(sweep_field(sweep) == "sweep.values");
}

TEST_CASE("series save and load") {
  ExperimentConfig cfg;
  cfg.basis_k = 3;
  cfg.rate = 0.5;
  cfg.differential = true;
  cfg.seed = 12;
  cfg.noise.photon_scale = 100.0;
  const auto series = run_acquisition(pattern_source(cfg), generate(cfg.phantom_spec()), cfg.imperfection,
                                      cfg.source_model(), cfg.noise_model(), cfg.differential);
  const auto path = scratch("series.txt");
  save_series(path, series, cfg);

  ExperimentConfig loaded;
  const auto back = load_series(path, loaded);
  CHECK(config_dump(loaded) == config_dump(cfg));
  REQUIRE(back.records.size() == series.records.size());
  for (std::size_t i = 0; i < back.records.size(); ++i) {
    CHECK(back.records[i].pattern_index == series.records[i].pattern_index);
    CHECK(back.records[i].bucket_plus == series.records[i].bucket_plus);
    CHECK(back.records[i].bucket_minus == series.records[i].bucket_minus);
  }
  CHECK(back.differential);
  CHECK(back.noise.seed == 12);

  write_text(path, "# basis.k=3\n# acquisition.differential=true\n0,1.0\n");
  ExperimentConfig c2;
  CHECK_THROWS_AS(load_series(path, c2), FormatError);
  write_text(path, "# basis.k=3\n999,1.0\n");
  CHECK_THROWS_AS(load_series(path, c2), FormatError);
}

}  // TEST_SUITE
