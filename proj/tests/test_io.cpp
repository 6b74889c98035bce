#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <locale>
#include <random>

#include "ioncool/error.hpp"
#include "ioncool/io.hpp"

using namespace ioncool;
namespace fs = std::filesystem;

namespace {

struct CommaDecimal : std::numpunct<char> {
  char do_decimal_point() const override { return ','; }
  char do_thousands_sep() const override { return '.'; }
  std::string do_grouping() const override { return "\3"; }
};

struct GlobalLocale {
  std::locale saved;
  GlobalLocale() : saved(std::locale::global(std::locale(std::locale::classic(), new CommaDecimal))) {}
  ~GlobalLocale() { std::locale::global(saved); }
};

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ioncool_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("double formatting round trips") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-300, 300);
  for (int i = 0; i < 20000; ++i) {
    const double v = std::ldexp(mant(gen), ex(gen));
    CHECK(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1.0) == "1");
  CHECK(io::format_double(-2.5e-7) == "-2.5e-07");
  CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("formatting ignores the global locale") {
  GlobalLocale guard;
  CHECK(io::format_double(1234.5) == "1234.5");
  CHECK(io::parse_double("1234.5") == 1234.5);
  ScanData s{{1000.25}, {0.5}, {0.01}};
  CHECK(io::scan_to_csv(s, "x") == "x,y,sigma_y\n1000.25,0.5,0.01\n");
  CHECK(io::dump(io::Json{{"v", 1000.25}}).find("1000.25") != std::string::npos);
}

TEST_CASE("strict parsing") {
  CHECK(io::parse_double(" 2.5 ") == 2.5);
  CHECK(io::parse_double("+1e3") == 1000.0);
  CHECK_THROWS_AS((void)io::parse_double(""), PreconditionError);
  CHECK_THROWS_AS((void)io::parse_double("1,5"), PreconditionError);
  CHECK_THROWS_AS((void)io::parse_double("2.5x"), PreconditionError);
  CHECK(io::parse_integer("-17") == -17);
  CHECK_THROWS_AS((void)io::parse_integer("3.0"), PreconditionError);
  CHECK_THROWS_AS((void)io::parse_integer("99999999999999999999"), PreconditionError);
}

TEST_CASE("scan CSV") {
  ScanData s{{0.0, 1.5e-6, 3e-6}, {0.1, 0.2, 1.0 / 3.0}, {0.01, 0.02, 0.03}};
  const auto text = io::scan_to_csv(s, "time_s");
  CHECK(text.rfind("time_s,y,sigma_y\n", 0) == 0);
  const auto back = io::scan_from_csv(text);
  CHECK(back.x == s.x);
  CHECK(back.y == s.y);
  CHECK(back.sigma_y == s.sigma_y);
  CHECK_THROWS_AS((void)io::scan_from_csv("x,y,sigma_y\n1,2\n"), PreconditionError);
  CHECK_THROWS_AS((void)io::csv_columns({"a", "b"}, {{1.0}, {1.0, 2.0}}), PreconditionError);
}

TEST_CASE("histogram outputs") {
  Histogram h;
  h.counts = {5, 0, 3};
  h.shots = 8;
  CHECK(io::histogram_to_csv(h) == "k,count\n0,5\n1,0\n2,3\n");
  const auto j = io::histogram_to_json(h);
  CHECK(j["shots"] == 8);
  CHECK(j["counts"].size() == 3);
  CHECK(j["mean"].get<double>() == doctest::Approx(6.0 / 8.0));
}

TEST_CASE("fit report JSON") {
  FitReport r;
  r.names = {"a", "b"};
  r.values = {1.0, 2.0};
  r.sigmas = {0.1, 0.2};
  r.covariance = {0.01, 0.0, 0.0, 0.04};
  r.chi2 = 3.0;
  r.dof = 5;
  r.converged = true;
  const auto j = io::fit_report_to_json(r);
  CHECK(j["parameters"]["b"]["sigma"].get<double>() == 0.2);
  CHECK(j["covariance"].size() == 4);
  CHECK(j["dof"] == 5);
  CHECK(j["converged"] == true);
  // key order is stable
  CHECK(j.begin().key() == "parameters");
}

TEST_CASE("atomic file writes") {
  const auto dir = scratch_dir("atomic");
  const auto path = dir / "out.csv";
  io::write_file_atomic(path, "first\n");
  io::write_file_atomic(path, "second\n");
  CHECK(io::read_file(path) == "second\n");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  CHECK_THROWS_AS((void)io::read_file(dir / "missing"), ConfigError);
  CHECK_THROWS((io::write_file_atomic(dir / "no" / "such" / "dir.txt", "x")));
  fs::remove_all(dir);
}

TEST_CASE("FNV-1a") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(io::hex64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
}
