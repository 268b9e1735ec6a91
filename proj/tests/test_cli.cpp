#include <doctest.h>

#include <cstdint>
#include <cstdlib>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <random>

#include "kamkdv/io.hpp"

using namespace kamkdv;
namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path d = [] {
    fs::path p = fs::temp_directory_path() / "kamkdv_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(KAMKDV_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path write_cfg(const std::string& name, double eps) {
  json j = {{"sites", {{"s_plus", {1}}}},
            {"params", {{"eps", eps}, {"xi", {1.5}}}},
            {"truncation", {{"L", 2}, {"J", 10}}},
            {"measure", {{"samples", 100}, {"Lmax", 3}, {"Jmax", 8}}}};
  fs::path p = scratch() / (name + ".json");
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("sites subcommand") {
    fs::path log = scratch() / "sites.out";
    REQUIRE(run("sites --nu 2 --start 1 --check 20", log) == 0);
    json j = json::parse(slurp(log));
    CHECK(j["s_plus"] == json({1, 3}));
    CHECK(j["S1"].get<bool>());
    CHECK(j["certifier_disagreements"].get<long long>() == 0);
  }

  TEST_CASE("solve at zero amplitude writes every artifact") {
    fs::path cfg = write_cfg("zero", 0.0), out = scratch() / "zero";
    REQUIRE(run("solve -c " + cfg.string() + " -o " + out.string(), scratch() / "zero.out") == 0);
    for (const char* f : {"config.json", "norms.csv", "spectrum.csv", "cantor.json", "solution.bin", "report.json",
                          "manifest.json"})
      CHECK(fs::exists(out / f));
    json rep = json::parse(slurp(out / "report.json"));
    CHECK(rep["converged"].get<bool>());
    CHECK(run("verify --run " + out.string(), scratch() / "zero_verify.out") == 0);
  }

  TEST_CASE("verify rejects a corrupted solution") {
    fs::path cfg = write_cfg("corrupt", 1e-3), out = scratch() / "corrupt";
    REQUIRE(run("solve -c " + cfg.string() + " -o " + out.string(), scratch() / "corrupt.out") == 0);
    REQUIRE(run("verify --run " + out.string(), scratch() / "corrupt_ok.out") == 0);
    std::string bytes = slurp(out / "solution.bin");
    std::ofstream(out / "solution.bin", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    CHECK(run("verify --run " + out.string(), scratch() / "corrupt_trunc.out") != 0);
    std::string bad = bytes;
    // Set the real part of the first stored coefficient (l = -L, j = -J) to one.
    const double one = 1.0;
    std::memcpy(bad.data() + 4 * sizeof(std::int32_t), &one, sizeof one);
    std::ofstream(out / "solution.bin", std::ios::binary) << bad;
    CHECK(run("verify --run " + out.string(), scratch() / "corrupt_val.out") != 0);
  }

  TEST_CASE("runs are deterministic") {
    fs::path cfg = write_cfg("det", 1e-3);
    REQUIRE(run("solve -c " + cfg.string() + " -o " + (scratch() / "det1").string(), scratch() / "det1.out") == 0);
    REQUIRE(run("solve -c " + cfg.string() + " -o " + (scratch() / "det2").string(), scratch() / "det2.out") == 0);
    for (const char* f : {"solution.bin", "norms.csv", "spectrum.csv", "cantor.json", "manifest.json"})
      CHECK(slurp(scratch() / "det1" / f) == slurp(scratch() / "det2" / f));
  }

  TEST_CASE("export samples the solution on a coarse grid") {
    fs::path cfg = write_cfg("exp", 1e-3), out = scratch() / "exp";
    REQUIRE(run("solve -c " + cfg.string() + " -o " + out.string(), scratch() / "exp.out") == 0);
    REQUIRE(run("export --run " + out.string() + " --nt 4 --nx 8", scratch() / "exp_export.out") == 0);
    std::istringstream is(slurp(out / "ugrid.csv"));
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,x,u");
    std::vector<double> u;
    while (std::getline(is, line)) u.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    REQUIRE(u.size() == 32);
    // Leading order 2 eps sqrt(xi) cos(x) at t = 0, x = 0.
    CHECK(u[0] == doctest::Approx(2e-3 * std::sqrt(1.5)).epsilon(0.02));
  }

  TEST_CASE("invalid configuration is rejected") {
    fs::path p = scratch() / "bad.json";
    std::ofstream(p) << R"({"params": {"eps": 1e-3, "bogus": 1}})";
    CHECK(run("solve -c " + p.string() + " -o " + (scratch() / "bad").string(), scratch() / "bad.out") != 0);
    CHECK(slurp(scratch() / "bad.out").find("unknown field 'bogus'") != std::string::npos);
  }

  TEST_CASE("JSON round trips for fields and polynomials") {
    std::mt19937_64 rng(3);
    FourierField u = random_real_field(2, 2, 5, rng, 1.0, 0.5, true);
    FourierField v = field_from_json(json::parse(field_to_json(u).dump()));
    CHECK(v.space_zero_mean());
    CHECK((u - v).max_abs() == 0.0);
    WeakBNF B(SiteSet({1, 3}), NonlinearitySpec::ux5());
    HomogPoly P = poly_from_json(json::parse(poly_to_json(B.F3).dump()));
    CHECK(P.terms() == B.F3.terms());
    CHECK_THROWS_AS(field_from_json(json{{"nu", 1}}), Error);
  }
}
