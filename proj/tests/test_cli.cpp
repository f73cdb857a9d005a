#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "doctest.h"
#include "ktb/errors.hpp"
#include "ktb/reflection.hpp"

using namespace ktb;
using namespace ktb::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ktbill_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(fields);
  }
  return rows;
}

int column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  FAIL("missing column " << name);
  return -1;
}

int config_error_line(const std::string& text) {
  try {
    const ExperimentConfig cfg = ExperimentConfig::parse_string(text);
    for (const char* label : {"K", "T"}) {
      if (cfg.has_body(label)) cfg.body(label);
    }
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

const char* kDiskDisk = R"(
[body K]
kind = ball
dimension = 2

[body T]
kind = ball
dimension = 2

[experiment]
seed = 1
m_max = 5
)";

}  // namespace

TEST_CASE("config errors report the offending line") {
  CHECK(config_error_line("[body K]\nkind = ball\nradius = abc\n") == 3);
  CHECK(config_error_line("# comment\n\n[bodies K]\n") == 3);
  CHECK(config_error_line("kind = ball\n") == 1);
  CHECK(config_error_line("[body K]\nkind = ball\nkind = ball\n") == 3);
  CHECK(config_error_line("[body K]\nkind ball\n") == 2);
  CHECK(config_error_line("[body K]\nkind = ball\ncolour = red\n") == 3);
  CHECK(config_error_line("[body K]\nkind = cube\n") == 2);
  CHECK(config_error_line("[body K]\nkind = ellipsoid\nmatrix = 1 2; 3 4\n") == 3);
  CHECK(config_error_line("[body K]\nkind = ellipsoid\nsemi_axes = 1 1\ncenter = 0 0 0\n") == 4);
  CHECK(config_error_line("[experiment]\nseed = 1\n[experiment]\n") == 3);
  CHECK(config_error_line("[body K]\nkind = germ\nc[2,x] = 1\n") == 3);
  CHECK(config_error_line("[body K]\nkind = ellipsoid\nsemi_axes = 1 -1\n") == 3);
  CHECK(config_error_line("[body K]\nkind = superellipsoid\nsemi_axes = 1 1\nexponent = 0.5\n") == 1);
  CHECK(config_error_line("[body K]\nkind = ball\n") == 0);
}

TEST_CASE("config bodies match their definitions") {
  const ExperimentConfig cfg = ExperimentConfig::parse_string(R"(
[body K]   # a shifted ellipse
kind = ellipsoid
semi_axes = 2 1
center = 1 -1

[body T]
kind = germ
c[2,0] = 0.5
c[0,2] = 0.5
radius = 0.4

[body B]
kind = superellipsoid
semi_axes = 1 2
exponent = 4
)");
  const BodyPtr k = cfg.body("K");
  CHECK(k->level(make_vec({3.0, -1.0})) == doctest::Approx(1.0));
  CHECK(k->level(make_vec({1.0, 0.0})) == doctest::Approx(1.0));
  const BodyPtr t = cfg.body("T");
  CHECK(t->dimension() == 3);
  const BodyPtr b = cfg.body("B");
  CHECK(b->level(make_vec({std::pow(0.5, 0.25), 2.0 * std::pow(0.5, 0.25)})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cfg.body("X"), ConfigError);
}

TEST_CASE("projtest on an ellipse has projective chord involutions") {
  const fs::path dir = scratch("projtest");
  const ExperimentConfig cfg = ExperimentConfig::parse_string(R"(
[body T]
kind = ellipsoid
matrix = 1 0.3; 0.3 4
[experiment]
seed = 11
directions = 20
)");
  std::ostringstream log;
  cmd_projtest(cfg, {std::nullopt, dir.string(), std::nullopt}, log);
  const auto rows = read_csv(dir / "projtest.csv");
  REQUIRE(rows.size() == 21);
  const int r = column(rows[0], "residual");
  CHECK(rows[0].size() == 6);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][r]) <= 1e-7);
}

TEST_CASE("projtest on x^4 + y^4 = 1 fits a quartic deviation") {
  const fs::path dir = scratch("projtest_quartic");
  const ExperimentConfig cfg = ExperimentConfig::parse_string(R"(
[body T]
kind = superellipsoid
semi_axes = 1 1
exponent = 4
[experiment]
seed = 7
directions = 12
)");
  std::ostringstream log;
  cmd_projtest(cfg, {std::nullopt, dir.string(), std::nullopt}, log);
  const auto rows = read_csv(dir / "projtest.csv");
  const int r = column(rows[0], "residual");
  const int k = column(rows[0], "fitted-exponent");
  int fitted = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (std::stod(rows[i][r]) < 1e-2) continue;
    CHECK(std::stod(rows[i][k]) == doctest::Approx(4.0).epsilon(0.05));
    ++fitted;
  }
  CHECK(fitted >= 3);
}

TEST_CASE("capacity of the disk pair prints 4.0000") {
  const fs::path dir = scratch("capacity");
  std::ostringstream log;
  cmd_capacity(ExperimentConfig::parse_string(kDiskDisk), {std::nullopt, dir.string(), std::nullopt}, log);
  CHECK(log.str().find("capacity 4.0000\n") != std::string::npos);
  const auto rows = read_csv(dir / "capacity.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"m", "action", "stationarity", "status"});
  CHECK(std::stod(rows[1][1]) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("trace with zero steps echoes the line and writes an empty orbit") {
  const fs::path dir = scratch("trace0");
  const ExperimentConfig cfg = ExperimentConfig::parse_string(R"(
[body K]
kind = ball
[body T]
kind = ball
[experiment]
line_point = 0.25 -0.5
line_direction = 0 2
steps = 0
)");
  std::ostringstream log;
  cmd_trace(cfg, {std::nullopt, dir.string(), std::nullopt}, log);
  CHECK(log.str().find("line point=(0.25, -0.5) direction=(0, 1)") != std::string::npos);
  const auto rows = read_csv(dir / "orbit.csv");
  CHECK(rows.size() == 1);
}

TEST_CASE("trace of a diameter alternates between the antipodes") {
  const fs::path dir = scratch("trace");
  const ExperimentConfig cfg = ExperimentConfig::parse_string(R"(
[body K]
kind = ball
[body T]
kind = ball
[experiment]
line_point = 0 0
line_direction = 0.6 0.8
steps = 4
)");
  std::ostringstream log;
  cmd_trace(cfg, {std::nullopt, dir.string(), std::nullopt}, log);
  const auto rows = read_csv(dir / "orbit.csv");
  REQUIRE(rows.size() >= 5);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::hypot(std::stod(rows[i][1]), std::stod(rows[i][2])) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(std::stod(rows.back()[4]) == doctest::Approx(2.0 * static_cast<double>(rows.size() - 2)).epsilon(1e-9));
  const std::string svg = slurp(dir / "trace.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("stroke=\"red\"") != std::string::npos);
}

TEST_CASE("reflect with the unit disk as T obeys the mirror law") {
  const fs::path dir = scratch("reflect");
  const ExperimentConfig cfg = ExperimentConfig::parse_string(R"(
[body K]
kind = superellipsoid
semi_axes = 1.2 0.8
exponent = 4
[body T]
kind = ball
[experiment]
lines = 50
)");
  std::ostringstream log;
  cmd_reflect(cfg, {std::uint64_t{4}, dir.string(), std::nullopt}, log);
  const BodyPtr k = cfg.body("K");
  const auto rows = read_csv(dir / "reflect.csv");
  REQUIRE(rows.size() == 51);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    REQUIRE(f.back() == "ok");
    const Vec d = make_vec({std::stod(f[3]), std::stod(f[4])});
    const Vec q = make_vec({std::stod(f[5]), std::stod(f[6])});
    const Vec r = make_vec({std::stod(f[7]), std::stod(f[8])});
    const Vec nu = normalized(k->level_gradient(q));
    CHECK((r - (d - 2.0 * d.dot(nu) * nu)).norm() <= 1e-9);
  }
}

TEST_CASE("osculate on an ellipse finds constant affine curvature") {
  const fs::path dir = scratch("osculate");
  const ExperimentConfig cfg = ExperimentConfig::parse_string(R"(
[body K]
kind = ellipsoid
semi_axes = 2 1
[experiment]
points = 16
)");
  std::ostringstream log;
  cmd_osculate(cfg, {std::nullopt, dir.string(), std::nullopt}, log);
  const auto rows = read_csv(dir / "osculate.csv");
  REQUIRE(rows.size() == 17);
  const int mu = column(rows[0], "affine_curvature");
  const int dmu = column(rows[0], "affine_curvature_derivative");
  const int flag = column(rows[0], "sextactic");
  const int cxx = column(rows[0], "c_xx");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    // Ellipse with semi-axes a, b: affine curvature (ab)^(-2/3).
    CHECK(std::stod(rows[i][mu]) == doctest::Approx(std::pow(2.0, -2.0 / 3.0)).epsilon(1e-8));
    CHECK(std::abs(std::stod(rows[i][dmu])) <= 1e-8);
    CHECK(rows[i][flag] == "yes");
    // Osculating conic of an ellipse is the ellipse: x^2/4 + y^2 - 1 up to scale.
    std::vector<double> c;
    for (int j = 0; j < 6; ++j) c.push_back(std::stod(rows[i][static_cast<std::size_t>(cxx + j)]));
    const double s = c[0] * 4.0;
    CHECK(std::abs(c[1]) <= 1e-7 * std::abs(s));
    CHECK(c[2] == doctest::Approx(s).epsilon(1e-7));
    CHECK(c[5] == doctest::Approx(-s).epsilon(1e-7));
  }
}

TEST_CASE("sweep separates the circle from the superellipses") {
  const fs::path dir = scratch("sweep");
  const ExperimentConfig cfg = ExperimentConfig::parse_string("[experiment]\np_min = 2\np_max = 4\np_steps = 3\n");
  std::ostringstream log;
  cmd_sweep(cfg, {std::nullopt, dir.string(), std::nullopt}, log);
  const auto rows = read_csv(dir / "sweep.csv");
  REQUIRE(rows.size() == 4);
  CHECK(std::stod(rows[1][1]) <= 1e-7);
  CHECK(std::stod(rows[3][1]) >= 1e-3);
  CHECK(fs::exists(dir / "sweep.svg"));
}

TEST_CASE("reruns are byte-identical and the seed matters") {
  const fs::path a = scratch("rerun_a");
  const fs::path b = scratch("rerun_b");
  const fs::path c = scratch("rerun_c");
  const ExperimentConfig cfg = ExperimentConfig::parse_string(R"(
[body K]
kind = ellipsoid
semi_axes = 1.5 1
[body T]
kind = superellipsoid
semi_axes = 1 1
exponent = 3
[experiment]
seed = 9
lines = 30
m_max = 3
multistarts = 8
directions = 5
points = 6
line_point = 0.1 0.2
line_direction = 1 0.3
steps = 12
)");
  std::ostringstream log;
  for (const fs::path& dir : {a, b}) {
    const RunOptions opts{std::nullopt, dir.string(), std::nullopt};
    cmd_reflect(cfg, opts, log);
    cmd_trace(cfg, opts, log);
    cmd_projtest(cfg, opts, log);
    cmd_osculate(cfg, opts, log);
    cmd_capacity(cfg, opts, log);
    cmd_sweep(cfg, opts, log);
  }
  for (const char* f : {"reflect.csv", "orbit.csv", "projtest.csv", "osculate.csv", "capacity.csv", "sweep.csv"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  cmd_reflect(cfg, {std::uint64_t{10}, c.string(), std::nullopt}, log);
  CHECK(slurp(a / "reflect.csv") != slurp(c / "reflect.csv"));
}

TEST_CASE("numbers are printed with 15 significant digits") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333333");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}

#ifdef KTBILL_BINARY
TEST_CASE("the binary maps failures to exit codes") {
  const fs::path dir = scratch("binary");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(KTBILL_BINARY) + " " + args + " > " + (dir / "stdout").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  const std::string good = write("good.ini", kDiskDisk);
  const std::string bad = write("bad.ini", "[body K]\nkind = ball\nradius = none\n");
  const std::string miss = write("miss.ini",
                                 "[body K]\nkind = ball\n[body T]\nkind = ball\n[experiment]\n"
                                 "line_point = 3 0\nline_direction = 0 1\n");
  const std::string out = (dir / "out").string();
  CHECK(run("capacity --config " + good + " --out " + out) == 0);
  CHECK(slurp(dir / "stdout").find("capacity 4.0000") != std::string::npos);
  CHECK(run("capacity --config " + bad + " --out " + out) == 1);
  CHECK(slurp(dir / "stdout").find("line 3") != std::string::npos);
  CHECK(run("capacity --config " + good + " --seed notanumber") == 1);
  CHECK(run("trace --config " + miss + " --out " + out) == 2);
}
#endif
