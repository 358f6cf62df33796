#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlmfg/cli.hpp"
#include "mlmfg/errors.hpp"
#include "mlmfg/instance_io.hpp"

using namespace mlmfg;
using namespace mlmfg::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mlmfg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("solve writes deterministic outputs") {
  const fs::path a = scratch_dir("solve_a");
  const fs::path b = scratch_dir("solve_b");
  Run r = run({"solve", "--builtin", "hori-fukushima-ext", "--out", a.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("approximate B-stationary") != std::string::npos);
  r = run({"solve", "--out", b.string()});
  REQUIRE(r.code == 0);

  const std::string csv = slurp(a / "trajectory.csv");
  CHECK(csv == slurp(b / "trajectory.csv"));
  const CsvTable table = parse_csv(csv);
  CHECK(table.rows.size() == 75);
  CHECK(table.header.front() == "k");
  CHECK(table.numbered_columns("x").size() == 4);
  CHECK(table.numbered_columns("lambda").size() == 6);

  const auto report = nlohmann::json::parse(slurp(a / "report.json"));
  CHECK(report.at("projection_residual").get<double>() <= 1e-4);
  CHECK(report.at("x_final").size() == 4);
  CHECK(fs::exists(a / "summary.txt"));

  // 17 significant digits round-trip the stored doubles
  const StationarityReport rep = parse_report_json(slurp(a / "report.json"));
  CHECK(rep.x_final(0) == table.rows.back()[table.column("x_1")]);

  SUBCASE("report recomputation") {
    r = run({"check", "--from-report", (a / "report.json").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);

    auto tampered = report;
    tampered["projection_residual"] = report.at("projection_residual").get<double>() + 1e-9;
    std::ofstream(b / "report.json") << tampered.dump();
    r = run({"check", "--from-report", (b / "report.json").string()});
    CHECK(r.code == 5);
    CHECK(r.out.find("projection_residual      FAIL") != std::string::npos);
  }
  SUBCASE("trace from the stored trajectory") {
    r = run({"trace", "--quantity", "y", "--trajectory", (a / "trajectory.csv").string()});
    REQUIRE(r.code == 0);
    const CsvTable y = parse_csv(r.out);
    CHECK(y.header == std::vector<std::string>{"k", "eps", "value_1", "value_2", "value_3", "value_4"});
    CHECK(y.rows.size() == 75);

    r = run({"trace", "--quantity", "residuals", "--trajectory", (a / "trajectory.csv").string()});
    REQUIRE(r.code == 0);
    const CsvTable res = parse_csv(r.out);
    CHECK(res.header == std::vector<std::string>{"k", "eps", "ncp_residual", "vi_residual", "comp_error"});
    for (const auto& row : res.rows) {
      CHECK(row[2] < 8e-6);
      CHECK(row[3] <= 1e-5);
      CHECK(row[4] <= 1e-8 * std::max(1.0, row[1] * row[1]));
    }
  }
}

TEST_CASE("single step solve") {
  const fs::path dir = scratch_dir("one");
  const Run r = run({"solve", "--steps", "1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(parse_csv(slurp(dir / "trajectory.csv")).rows.size() == 1);
  CHECK(nlohmann::json::parse(slurp(dir / "report.json")).at("cauchy_tail").is_null());
}

TEST_CASE("x trace produced inline") {
  const Run r = run({"trace", "--quantity", "x", "--steps", "3", "--x0", "1,1,1,1"});
  REQUIRE(r.code == 0);
  const CsvTable t = parse_csv(r.out);
  CHECK(t.rows.size() == 3);
  CHECK(t.header.size() == 6);
}

TEST_CASE("exit codes") {
  Run r = run({"solve", "--instance", "/no/such/instance.json"});
  CHECK(r.code == 3);
  CHECK(r.err.find("/no/such/instance.json") != std::string::npos);

  CHECK(run({"trace", "--quantity", "z"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"solve", "--frobnicate"}).code == 2);
  CHECK(run({"solve", "--x0", "1,2"}).code == 2);
  CHECK(run({"solve", "--ratio", "1.5"}).code == 2);
  CHECK(run({"solve", "--builtin", "nope"}).code == 2);
  CHECK(run({"solve", "--instance", "builtin:nope"}).code == 2);
  CHECK(run({"trace", "--quantity", "x", "--trajectory", "/no/such/trajectory.csv"}).code == 3);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("check suite") {
  Run r = run({"check", "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("10 of 10 checks passed") != std::string::npos);
  r = run({"check", "--seed", "2"});
  CHECK(r.code == 0);

  const fs::path dir = scratch_dir("bad");
  ProblemInstance inst = hori_fukushima_extended();
  inst.followers[0].M.setZero();
  save_instance(inst, dir / "bad.json");
  r = run({"check", "--instance", (dir / "bad.json").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("positive definite") != std::string::npos);

  save_instance(hori_fukushima_extended(), dir / "good.json");
  r = run({"solve", "--instance", (dir / "good.json").string(), "--steps", "2", "--out", dir.string()});
  CHECK(r.code == 0);
}

TEST_CASE("solver failure exit code") {
  const fs::path dir = scratch_dir("fail");
  // the follower feasible set is empty for sum(x) < -4
  const Run r = run({"solve", "--x0=-5,-5,-5,-5", "--steps", "2", "--out", dir.string()});
  CHECK(r.code == 4);
  CHECK(r.err.find("k = 0") != std::string::npos);
}

TEST_CASE("logging follows MLMFG_LOG") {
  const fs::path dir = scratch_dir("log");
  ::setenv("MLMFG_LOG", "info", 1);
  Run r = run({"solve", "--steps", "2", "--out", dir.string()});
  CHECK(r.err.find("k=1") != std::string::npos);
  ::setenv("MLMFG_LOG", "quiet", 1);
  r = run({"solve", "--steps", "2", "--out", dir.string()});
  CHECK(r.out.empty());
  CHECK(r.err.empty());
  ::unsetenv("MLMFG_LOG");
}

TEST_CASE("csv helpers") {
  const CsvTable t = parse_csv("k,eps,x_1,x_2\n0,1,2,3\n1,0.5,4,5\n");
  CHECK(t.column("eps") == 1);
  CHECK(t.numbered_columns("x") == std::vector<std::size_t>{2, 3});
  CHECK(trace_csv(t, "x") == "k,eps,value_1,value_2\n0,1,2,3\n1,0.5,4,5\n");
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ParseError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,zz\n"), ParseError);
  CHECK_THROWS_AS(trace_csv(t, "residuals"), std::out_of_range);
  CHECK_THROWS_AS(trace_csv(t, "w"), std::invalid_argument);
}
