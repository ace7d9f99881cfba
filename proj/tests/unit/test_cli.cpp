#include "helpers.hpp"

#include "evolab/report.hpp"
#include "evolab/runner.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace evolab;
namespace fs = std::filesystem;

namespace {

const std::string kSource = EVOLAB_SOURCE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("evolab_unit_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int shell(const std::string& cmd) {
  const int st = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void expect_config_error(const std::string& text, const std::string& fragment) {
  try {
    load_config_text(text);
    FAIL("no error for: " << text);
  } catch (const ConfigError& e) {
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_CASE("config parsing") {
  const auto t = parse_config_text("name = \"a\" # c\ndimension = 2\n\n[diffusion]\ndiag = [1, 2.5]\n[constants]\nsuperlinear = true\n");
  CHECK(std::get<std::string>(t.at("").at("name").value) == "a");
  CHECK(std::get<double>(t.at("").at("dimension").value) == 2.0);
  CHECK(std::get<std::vector<double>>(t.at("diffusion").at("diag").value) == std::vector<double>{1.0, 2.5});
  CHECK(std::get<bool>(t.at("constants").at("superlinear").value));
  CHECK(t.at("diffusion").at("diag").line == 5);

  const auto ou = load_config_text(slurp(kSource + "/configs/ou.toml"));
  CHECK(ou.spec.ou);
  CHECK(ou.spec.r0 == -1.0);
  const auto p = load_config(kSource + "/configs/power4.toml");
  CHECK(std::holds_alternative<Ultracontractive>(p.spec.regime.tag));
  REQUIRE(p.potential);
  CHECK(p.potential->c0 == 1.0);
  CHECK(p.potential->c(0.0, testing::scalar(2.0)) == 5.0);
  CHECK(p.path == kSource + "/configs/power4.toml");
  CHECK(p.content_hash != ou.content_hash);

  const auto e = load_config_text(
      "[diffusion]\nq = \"1 + 0.5*sin(t)\"\n[drift]\nexpr = \"-x1 - x1^3\"\n[constants]\neta0 = 0.5\nLambda = 1.5\n"
      "r0 = -1\nregime = \"ultracontractive\"\nK3 = 1\nkappa = 4\n");
  CHECK(e.spec.Q(std::numbers::pi / 2)(0, 0) == doctest::Approx(1.5));
  CHECK(e.spec.b(0.0, testing::scalar(2.0))[0] == doctest::Approx(-10.0));
  CHECK(e.spec.regime.rank() == 3);
}

TEST_CASE("config errors carry line numbers") {
  expect_config_error("[drift]\npreset = \"ou\"\n[nope]\n", "line 3");
  expect_config_error("[drift]\npreset = \"ou\"\nthetta = 1\n", "line 3");
  expect_config_error("[drift]\npreset = \"ou\"\npreset = \"ou\"\n", "duplicate");
  expect_config_error("[drift]\npreset = ou\n", "line 2");
  expect_config_error("[drift]\nexpr = \"-x1\"\n", "r0");
  expect_config_error("[drift]\nexpr = \"-x1 +\"\n[constants]\nr0 = -1\n", "byte");
  expect_config_error("[drift]\npreset = \"warp\"\n", "warp");
  expect_config_error("dimension = 0\n[drift]\npreset = \"ou\"\n", "dimension");
  expect_config_error("[drift]\npreset = \"ou\"\n[constants]\nregime = \"ultracontractive\"\nK3 = 1\n", "kappa");
  CHECK_THROWS_AS(load_config("/nonexistent/x.toml"), ConfigError);
}

TEST_CASE("report files") {
  InequalityParams a;
  a.p = 2.0;
  a.x = testing::vec({0.5, -1.0});
  InequalityParams b;
  b.eps = 0.1;
  std::vector<InequalityReport> reps{make_report("zeta", a, {1.0, 0.1, 10}, {2.0, 0.0, 10}, 7),
                                     make_report("alpha", b, {3.0, 0.0, 10}, {1.0, 0.0, 10}, 7),
                                     make_report("mid,comma", b, {1.0, 1.0, 10}, {1.1, 1.0, 10}, 7)};
  reps[0].notes.push_back("note");
  const auto sorted = sort_reports(reps);
  CHECK(sorted[0].name == "alpha");
  std::vector<InequalityReport> rev(reps.rbegin(), reps.rend());
  CHECK(report_csv(sort_reports(rev)) == report_csv(sorted));

  const std::string csv = report_csv(sorted);
  std::istringstream lines(csv);
  std::string header, first, second, third;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  std::getline(lines, third);
  CHECK(header == "name,p,q,eps,lambda,delta,s,t,x,y,lhs,lhs_se,rhs,rhs_se,margin,verdict,seed");
  CHECK(first == "alpha,,,0.10000000000000001,,,,,,,3,0,1,0,-2,fail,7");
  CHECK(second.rfind("\"mid,comma\",", 0) == 0);
  CHECK(third.find(",0.5|-1,") != std::string::npos);

  const auto j = nlohmann::json::parse(summary_json(sorted));
  CHECK(j["total"]["pass"] == 1);
  CHECK(j["total"]["fail"] == 1);
  CHECK(j["total"]["inconclusive"] == 1);
  CHECK(j["checks"]["zeta"]["notes"][0] == "note");
  CHECK(j["exit_code"] == 2);

  CHECK(exit_code({}) == 0);
  CHECK(exit_code({sorted[1]}) == 3);
  CHECK(exit_code(sorted) == 2);
  CHECK(std::stod(format_number(0.1)) == 0.1);

  std::ostringstream plot;
  write_plot(plot, "x y", {1.0, 2.0}, {3.0, 4.0});
  CHECK(plot.str() == "# x y\n1 3\n2 4\n");
  CHECK_THROWS_AS(write_plot(plot, "", {1.0}, {}), PreconditionError);

  std::ostringstream est;
  write_estimate_csv(est, {{"m", {1.5, 0.25, 100}}}, 9);
  CHECK(est.str() == "name,value,stderr,n,seed\nm,1.5,0.25,100,9\n");
}

TEST_CASE("manifest hash") {
  RunManifest a;
  a.config_hash = 123;
  RunManifest b = a;
  b.out = "elsewhere";
  b.timestamp = "2020-01-01T00:00:00Z";
  b.config_path = "/some/other/copy.toml";
  CHECK(a.hash() == b.hash());
  CHECK(a.canonical_json() == b.canonical_json());
  CHECK(a.hash_hex().size() == 16);
  b.seed = 2;
  CHECK(a.hash() != b.hash());
  RunManifest c = a;
  c.checks = {"harnack"};
  CHECK(a.hash() != c.hash());
}

TEST_CASE("run writes a reproducible artifact set") {
  const fs::path root = scratch("run");
  RunManifest m;
  m.config_path = kSource + "/configs/ou.toml";
  m.checks = {"gradient", "harnack"};
  m.samples = 400;
  m.delta_grid = {0.5};
  m.out = (root / "a").string();
  const auto r1 = run(m);
  REQUIRE_MESSAGE(r1.exit_code <= kExitInconclusive, r1.diagnostic);
  const fs::path dir(r1.directory);
  for (const char* f : {"manifest.json", "timestamp.txt", "reports.csv", "summary.json"}) CHECK(fs::exists(dir / f));
  const auto sum = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(sum["exit_code"] == r1.exit_code);

  // a second run into the same place refuses and leaves the first intact
  const std::string before = slurp(dir / "reports.csv");
  const auto again = run(m);
  CHECK(again.exit_code == kExitConfig);
  CHECK(slurp(dir / "reports.csv") == before);

  const auto forced = run(m, true);
  CHECK(forced.exit_code == r1.exit_code);
  CHECK(slurp(dir / "reports.csv") == before);

  m.out = (root / "b").string();
  const auto r2 = run(m);
  const fs::path dir2(r2.directory);
  CHECK(dir2.filename() == dir.filename());
  for (const char* f : {"manifest.json", "reports.csv", "summary.json"}) CHECK(slurp(dir / f) == slurp(dir2 / f));
  fs::remove_all(root);
}

TEST_CASE("run maps errors to exit codes") {
  const fs::path root = scratch("errors");
  RunManifest m;
  m.config_path = kSource + "/configs/ou.toml";
  m.out = root.string();
  m.checks = {"heat_kernel"};
  m.delta_grid = {0.1, 0.15, 0.22, 0.33, 0.5, 0.75};
  const auto hk = run(m);
  CHECK(hk.exit_code == kExitConfig);
  CHECK(hk.diagnostic.find("ultracontractive") != std::string::npos);
  CHECK(fs::is_empty(root));

  m.checks = {"no_such_check"};
  CHECK(run(m).exit_code == kExitConfig);
  m.checks = {"gradient"};
  m.config_path = (root / "missing.toml").string();
  CHECK(run(m).exit_code == kExitConfig);
  fs::remove_all(root);
}

TEST_CASE("command line") {
  const std::string cli = EVOLAB_CLI;
  const fs::path root = scratch("cli");
  const std::string ou = kSource + "/configs/ou.toml";
  CHECK(shell(cli + " presets") == 0);
  CHECK(shell(cli + " checks") == 0);
  CHECK(shell(cli + " run " + ou + " --checks heat_kernel --delta-grid 0.1,0.15,0.22,0.33,0.5,0.75 --out " +
              root.string()) == 64);
  CHECK(shell(cli + " run " + ou + " --delta-grid 0.5,x --out " + root.string()) == 64);
  CHECK(shell(cli + " run") == 64);
  CHECK(shell(cli + " run " + ou + " --checks harnack,gradient --seed 42 --samples 300 --delta-grid 0.5 --out " +
              root.string()) <= 3);
  std::size_t rows = 0;
  for (const auto& d : fs::directory_iterator(root)) {
    std::istringstream csv(slurp(d.path() / "reports.csv"));
    std::string line;
    while (std::getline(csv, line)) ++rows;
  }
  CHECK(rows > 1);
  fs::remove_all(root);
}
