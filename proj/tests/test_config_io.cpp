#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gravduct/config.hpp"
#include "gravduct/errors.hpp"
#include "gravduct/io.hpp"

using namespace gravduct;
namespace fs = std::filesystem;

namespace {

const std::string kReference = std::string(GRAVDUCT_TEST_DATA) + "/reference.ini";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gravduct_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GRAVDUCT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "summary.json")); }

const char* kMinimal =
    "[background]\n"
    "gamma = 2\nm0 = 2.331643981597124\nS0 = 1\nrho0 = 2\nG0 = -1\nL = 0.5\n";

}  // namespace

TEST_SUITE("cli_io") {

TEST_CASE("minimal configuration takes the documented defaults") {
  const RunConfig c = parse_config_text(kMinimal);
  CHECK(c.n1 == 64);
  CHECK(c.n2 == 64);
  CHECK(c.iteration.sigma == 1e-3);
  CHECK(c.iteration.tol_fixpoint == 1e-10);
  CHECK(c.background.gamma == 2.0);
  CHECK(c.background.L == 0.5);
  CHECK_NOTHROW(validate_for(c, Subcommand::solve));
}

TEST_CASE("configuration errors name the key") {
  CHECK_THROWS_AS(parse_config_text(std::string(kMinimal) + "bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(std::string(kMinimal) + "[nowhere]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(std::string(kMinimal) + "L = 0.7\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(std::string(kMinimal) + "[boundary]\nB_en_amplitude = 1\n"),
                  ConfigError);
  CHECK_NOTHROW(parse_config_text(std::string(kMinimal) + "[boundary]\nB_en_amplitude = 1\ngeneral_k = true\n"));
  try {
    parse_config_text(std::string(kMinimal) + "[grid]\nn1 = many\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "grid.n1");
  }
  CHECK_THROWS_AS(parse_config("/nonexistent/gravduct.ini"), ConfigError);
}

TEST_CASE("supersonic inlet is rejected by the 2D pipeline") {
  // rho_s = (m0^2 / (gamma e^S0))^(1/(gamma+1)) = 1 here, so rho0 = 0.5 is supersonic.
  std::string text = kMinimal;
  text.replace(text.find("rho0 = 2"), 8, "rho0 = 0.5");
  const RunConfig c = parse_config_text(text);
  CHECK_THROWS_AS(validate_for(c, Subcommand::solve), ConfigError);
  CHECK_THROWS_AS(validate_for(c, Subcommand::stability), ConfigError);
  CHECK_NOTHROW(validate_for(c, Subcommand::phase));
}

TEST_CASE("FNV-1a digest") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("CSV values round-trip exactly") {
  const fs::path dir = scratch("csv");
  const Grid g(0.3, 5, 7);
  const auto f = ScalarField::sample(g, "f", [](double a, double b) { return std::exp(a) / 3.0 + b / 7.0; });
  write_field_csv((dir / "f.csv").string(), f);
  std::ifstream in(dir / "f.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "x1,x2,value");
  int i = 0, j = 0;
  while (std::getline(in, line)) {
    const double v = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(v == f(i, j));
    if (++j > g.n2) {
      j = 0;
      ++i;
    }
  }
  CHECK(i == g.n1 + 1);
  fs::remove_all(dir);
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = scratch("cli");
  CHECK(run_cli("solve --config /nonexistent.ini --out " + (dir / "missing").string()) == 2);
  CHECK(summary(dir / "missing")["exit_code"] == 2);
  CHECK(run_cli("solve") == 2);
  CHECK(run_cli("frobnicate --config " + kReference) == 2);
  CHECK(run_cli("solve --config " + kReference + " --grid 12by12 --out " + (dir / "g").string()) == 2);

  const fs::path zero = dir / "zero";
  CHECK(run_cli("solve --config " + kReference + " --sigma 0 --grid 16x16 --out " + zero.string()) == 0);
  const auto s = summary(zero);
  CHECK(s["schema"] == kSummarySchema);
  CHECK(s["status"] == "ok");
  CHECK(s["flow"]["background_deviation"].get<double>() < 1e-10);
  CHECK(fs::exists(zero / "fields.csv"));
  CHECK(fs::exists(zero / "iteration.log"));

  // A duct longer than the lifespan fails as a sonic error.
  std::string text = slurp(kReference);
  text.replace(text.rfind("L = 0.5"), 7, "L = 6");
  std::ofstream(dir / "long.ini") << text;
  CHECK(run_cli("background --config " + (dir / "long.ini").string() + " --out " + (dir / "long").string()) == 3);
  CHECK(summary(dir / "long")["error"]["class"] == "sonic");

  const fs::path phase = dir / "phase";
  CHECK(run_cli("phase --config " + kReference + " --out " + phase.string()) == 0);
  CHECK(summary(phase)["phase"]["symmetry_defect"].get<double>() < 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("runs are deterministic") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string common = "solve --config " + kReference + " --grid 16x16 --out ";
  REQUIRE(run_cli(common + a.string()) == 0);
  REQUIRE(run_cli(common + b.string()) == 0);
  CHECK(slurp(a / "fields.csv") == slurp(b / "fields.csv"));
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

}  // TEST_SUITE
