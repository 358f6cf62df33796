#include "mlmfg/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "mlmfg/checks.hpp"
#include "mlmfg/errors.hpp"
#include "mlmfg/instance_io.hpp"

namespace mlmfg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Verbosity { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

struct Failure {
  int code;
  std::string message;
};

struct RunConfig {
  std::string instance;
  std::string builtin;
  Schedule schedule;
  std::vector<double> x0;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool retry_halve = false;
  std::string quantity;
  std::string from_report;
  std::string trajectory;
  Verbosity verbosity = Verbosity::Warn;
};

struct LoadedModel {
  std::string label;
  std::unique_ptr<QuadraticGameModel> model;
};

Verbosity verbosity_from_env(std::ostream& err) {
  const char* raw = std::getenv("MLMFG_LOG");
  if (raw == nullptr || *raw == '\0') return Verbosity::Warn;
  const std::string v = raw;
  if (v == "quiet" || v == "0") return Verbosity::Quiet;
  if (v == "warn" || v == "1") return Verbosity::Warn;
  if (v == "info" || v == "2") return Verbosity::Info;
  if (v == "debug" || v == "3") return Verbosity::Debug;
  err << fmt::format("warning: ignoring MLMFG_LOG={} (expected quiet, warn, info or debug)\n", v);
  return Verbosity::Warn;
}

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += fmt::format("{}{:.10g}", i ? ", " : "", v(i));
  return s;
}

std::string read_file(const fs::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitValidation, fmt::format("missing {}: cannot read '{}'", what, path.string())};
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure{kExitValidation, fmt::format("cannot write '{}'", path.string())};
}

LoadedModel load_model(const RunConfig& cfg, std::ostream& err) {
  std::string builtin = cfg.builtin;
  if (cfg.instance.starts_with("builtin:")) builtin = cfg.instance.substr(8);
  if (builtin.empty() && cfg.instance.empty()) builtin = std::string(kBuiltinHoriFukushima);

  LoadedModel out;
  ProblemInstance inst;
  if (!builtin.empty()) {
    if (builtin != kBuiltinHoriFukushima) {
      throw Failure{kExitUsage, fmt::format("unknown builtin instance '{}' (available: {})", builtin,
                                            kBuiltinHoriFukushima)};
    }
    inst = hori_fukushima_extended();
    out.label = "builtin:" + builtin;
  } else {
    std::vector<std::string> warnings;
    try {
      inst = load_instance(cfg.instance, &warnings);
    } catch (const ParseError& e) {
      throw Failure{kExitValidation, fmt::format("cannot load instance: {}", e.what())};
    }
    if (cfg.verbosity >= Verbosity::Warn) {
      for (const auto& w : warnings) err << "warning: " << w << '\n';
    }
    out.label = cfg.instance;
  }

  const ValidationReport report = validate_instance(inst);
  if (!report.ok) {
    std::string msg = fmt::format("instance {} failed validation:", out.label);
    for (const auto& v : report.violations) msg += "\n  - " + v;
    throw Failure{kExitValidation, msg};
  }
  out.model = build_quadratic_model(inst);
  return out;
}

Vector initial_point(const RunConfig& cfg, const GameModel& model) {
  const int n = model.dims().n();
  if (cfg.x0.empty()) return Vector::Constant(n, 3.0);
  if (static_cast<int>(cfg.x0.size()) != n) {
    throw Failure{kExitUsage, fmt::format("--x0 has {} entries but the instance has n = {}", cfg.x0.size(), n)};
  }
  return Eigen::Map<const Vector>(cfg.x0.data(), n);
}

HomotopyTrajectory solve_path(const RunConfig& cfg, const GameModel& model, const Vector& x0,
                              const fs::path* partial_out) {
  HomotopyOptions options;
  options.retry_halve = cfg.retry_halve;
  try {
    return run_homotopy(model, cfg.schedule, x0, options);
  } catch (const HomotopyFailure& e) {
    if (partial_out != nullptr && !e.partial().records.empty()) {
      write_file(*partial_out, trajectory_csv(e.partial()));
    }
    throw Failure{kExitSolver, fmt::format("solver failure at step k = {} (eps = {:.6g}): {}", e.step(),
                                           cfg.schedule.eps(e.step()), e.what())};
  }
}

void log_trajectory(const HomotopyTrajectory& traj, Verbosity level, std::ostream& err) {
  if (level < Verbosity::Info) return;
  for (const HomotopyRecord& r : traj.records) {
    err << fmt::format("k={:<3} eps={:<12.6g} ncp={:.3e} vi={:.3e} leader_it={} follower_it={}", r.k, r.eps,
                       r.ncp_residual, r.vi_residual, r.newton_iters_leader, r.newton_iters_follower);
    if (level >= Verbosity::Debug) err << fmt::format(" time={:.4f}s x=({})", r.wall_time, join(r.x));
    err << '\n';
  }
}

std::string summary_text(const std::string& label, const RunConfig& cfg, const Vector& x0,
                         const HomotopyTrajectory& traj, const StationarityReport& rep) {
  int leader_it = 0;
  int follower_it = 0;
  double wall = 0.0;
  for (const HomotopyRecord& r : traj.records) {
    leader_it += r.newton_iters_leader;
    follower_it += r.newton_iters_follower;
    wall += r.wall_time;
  }
  const HomotopyRecord& last = traj.records.back();
  std::string s;
  s += fmt::format("instance             {}\n", label);
  s += fmt::format("schedule             eps_k = {:g} * {:g}^k, k = 0..{}\n", cfg.schedule.eps0, cfg.schedule.ratio,
                   cfg.schedule.steps - 1);
  s += fmt::format("x0                   ({})\n", join(x0));
  s += fmt::format("steps completed      {}\n", traj.records.size());
  s += fmt::format("final eps            {:.6g}\n", rep.eps_final);
  s += fmt::format("final x              ({})\n", join(last.x));
  s += fmt::format("final y              ({})\n", join(last.y));
  s += fmt::format("final mu             ({})\n", join(last.mu));
  s += fmt::format("projection residual  {:.3e}\n", rep.projection_residual);
  s += fmt::format("comp product error   {:.3e}\n", rep.comp_product_error);
  s += rep.cauchy_tail ? fmt::format("cauchy tail          {:.3e}\n", *rep.cauchy_tail)
                       : std::string("cauchy tail          n/a\n");
  s += fmt::format("leader iterations    {}\n", leader_it);
  s += fmt::format("follower iterations  {}\n", follower_it);
  s += fmt::format("wall time            {:.3f} s\n", wall);
  s += fmt::format("result               {}\n", rep.label);
  return s;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const LoadedModel lm = load_model(cfg, err);
  const Vector x0 = initial_point(cfg, *lm.model);
  const fs::path dir = cfg.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{kExitValidation, fmt::format("cannot create '{}': {}", dir.string(), ec.message())};

  const fs::path csv_path = dir / "trajectory.csv";
  const HomotopyTrajectory traj = solve_path(cfg, *lm.model, x0, &csv_path);
  log_trajectory(traj, cfg.verbosity, err);
  const StationarityReport rep = stationarity_report(*lm.model, traj);
  const std::string summary = summary_text(lm.label, cfg, x0, traj, rep);

  write_file(csv_path, trajectory_csv(traj));
  write_file(dir / "report.json", report_json(rep, lm.label, cfg.schedule));
  write_file(dir / "summary.txt", summary);
  if (cfg.verbosity >= Verbosity::Warn) out << summary;
  return kExitOk;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

int cmd_check_report(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const LoadedModel lm = load_model(cfg, err);
  StationarityReport stored;
  try {
    stored = parse_report_json(read_file(cfg.from_report, "report"));
  } catch (const ParseError& e) {
    throw Failure{kExitValidation, fmt::format("{}: {}", cfg.from_report, e.what())};
  }
  if (stored.x_final.size() != lm.model->dims().n()) {
    throw Failure{kExitValidation, fmt::format("{}: x_final does not match the instance dimension", cfg.from_report)};
  }
  const StationarityReport fresh =
      stationarity_report(*lm.model, stored.eps_final, stored.x_final, stored.cauchy_tail);

  struct Row {
    std::string name;
    bool ok;
    std::string detail;
  };
  std::vector<Row> rows;
  auto num = [&](const std::string& name, double s, double f) {
    rows.push_back({name, close(f, s), fmt::format("stored {:.17g}, recomputed {:.17g}", s, f)});
  };
  num("projection_residual", stored.projection_residual, fresh.projection_residual);
  num("comp_product_error", stored.comp_product_error, fresh.comp_product_error);
  num("degeneracy.tol", stored.degeneracy.tol, fresh.degeneracy.tol);
  const auto& sd = stored.degeneracy;
  const auto& fd = fresh.degeneracy;
  rows.push_back({"degeneracy sets",
                  sd.zero_plus == fd.zero_plus && sd.zero_zero == fd.zero_zero && sd.plus_zero == fd.plus_zero &&
                      sd.interior == fd.interior,
                  ""});
  rows.push_back({"strict_complementarity", stored.strict_complementarity == fresh.strict_complementarity, ""});
  rows.push_back({"label", stored.label == fresh.label, fresh.label});

  bool all = true;
  for (const Row& r : rows) {
    all = all && r.ok;
    out << fmt::format("{:<24} {:<4}  {}\n", r.name, r.ok ? "PASS" : "FAIL", r.detail);
  }
  return all ? kExitOk : kExitCheck;
}

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.from_report.empty()) return cmd_check_report(cfg, out, err);
  const LoadedModel lm = load_model(cfg, err);
  CheckConfig cc;
  cc.seed = cfg.seed;
  cc.schedule = cfg.schedule;
  cc.x0 = initial_point(cfg, *lm.model);
  const std::vector<CheckResult> results = run_invariant_checks(*lm.model, cc);
  int failed = 0;
  for (const CheckResult& r : results) {
    if (!r.passed) ++failed;
    out << fmt::format("{:<16} {:<56} {:<4}  {}\n", r.suite, r.name, r.passed ? "PASS" : "FAIL", r.detail);
  }
  out << fmt::format("{} of {} checks passed (seed {})\n", results.size() - failed, results.size(), cfg.seed);
  return failed == 0 ? kExitOk : kExitCheck;
}

int cmd_trace(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::string csv;
  if (!cfg.trajectory.empty()) {
    csv = read_file(cfg.trajectory, "trajectory");
  } else {
    const LoadedModel lm = load_model(cfg, err);
    const HomotopyTrajectory traj = solve_path(cfg, *lm.model, initial_point(cfg, *lm.model), nullptr);
    log_trajectory(traj, cfg.verbosity, err);
    csv = trajectory_csv(traj);
  }
  try {
    out << trace_csv(parse_csv(csv), cfg.quantity);
  } catch (const std::exception& e) {
    throw Failure{kExitValidation, fmt::format("malformed trajectory: {}", e.what())};
  }
  return kExitOk;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

std::string trajectory_csv(const HomotopyTrajectory& trajectory) {
  std::string s = "k,eps";
  if (!trajectory.records.empty()) {
    const HomotopyRecord& r0 = trajectory.records.front();
    auto names = [&](std::string_view prefix, Eigen::Index count) {
      for (Eigen::Index i = 1; i <= count; ++i) s += fmt::format(",{}_{}", prefix, i);
    };
    names("x", r0.x.size());
    names("mu", r0.mu.size());
    names("y", r0.y.size());
    names("z", r0.z.size());
    names("lambda", r0.lambda.size());
  }
  s += ",ncp_residual,vi_residual,follower_comp_error,newton_iters_leader,newton_iters_follower,"
       "newton_solve_failures,rejected_trials\n";
  for (const HomotopyRecord& r : trajectory.records) {
    s += fmt::format("{},{:.17g}", r.k, r.eps);
    for (const Vector* v : {&r.x, &r.mu, &r.y, &r.z, &r.lambda}) {
      for (Eigen::Index i = 0; i < v->size(); ++i) s += fmt::format(",{:.17g}", (*v)(i));
    }
    s += fmt::format(",{:.17g},{:.17g},{:.17g},{},{},{},{}\n", r.ncp_residual, r.vi_residual, r.follower_comp_error,
                     r.newton_iters_leader, r.newton_iters_follower, r.newton_solve_failures, r.rejected_trials);
  }
  return s;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range(fmt::format("no column '{}'", name));
}

std::vector<std::size_t> CsvTable::numbered_columns(std::string_view prefix) const {
  std::vector<std::size_t> out;
  for (int i = 1;; ++i) {
    const std::string name = fmt::format("{}_{}", prefix, i);
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) break;
    out.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<std::string_view> cells;
    for (std::size_t start = 0;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (table.header.empty()) {
      table.header.assign(cells.begin(), cells.end());
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ParseError(fmt::format("line {}: expected {} cells, found {}", line_no, table.header.size(), cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto [ptr, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), row[i]);
      if (ec != std::errc{} || ptr != cells[i].data() + cells[i].size()) {
        throw ParseError(fmt::format("line {}: '{}' is not a number", line_no, cells[i]));
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw ParseError("empty trajectory file");
  return table;
}

std::string trace_csv(const CsvTable& trajectory, std::string_view quantity) {
  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  if (quantity == "x" || quantity == "y") {
    cols = trajectory.numbered_columns(quantity);
    if (cols.empty()) throw ParseError(fmt::format("trajectory has no {}_1 column", quantity));
    for (std::size_t i = 1; i <= cols.size(); ++i) names.push_back(fmt::format("value_{}", i));
  } else if (quantity == "residuals") {
    cols = {trajectory.column("ncp_residual"), trajectory.column("vi_residual"),
            trajectory.column("follower_comp_error")};
    names = {"ncp_residual", "vi_residual", "comp_error"};
  } else {
    throw std::invalid_argument(fmt::format("unknown trace quantity '{}'", quantity));
  }
  const std::size_t k_col = trajectory.column("k");
  const std::size_t eps_col = trajectory.column("eps");

  std::string s = "k,eps";
  for (const auto& n : names) s += "," + n;
  s += '\n';
  for (const auto& row : trajectory.rows) {
    s += fmt::format("{:.17g},{:.17g}", row[k_col], row[eps_col]);
    for (std::size_t c : cols) s += fmt::format(",{:.17g}", row[c]);
    s += '\n';
  }
  return s;
}

std::string report_json(const StationarityReport& report, const std::string& instance_label,
                        const Schedule& schedule) {
  json j;
  j["instance"] = instance_label;
  j["schedule"] = {{"eps0", schedule.eps0}, {"ratio", schedule.ratio}, {"steps", schedule.steps}};
  j["eps_final"] = report.eps_final;
  j["x_final"] = vector_json(report.x_final);
  j["projection_residual"] = report.projection_residual;
  j["comp_product_error"] = report.comp_product_error;
  j["degeneracy"] = {{"tol", report.degeneracy.tol},
                     {"zero_plus", report.degeneracy.zero_plus},
                     {"zero_zero", report.degeneracy.zero_zero},
                     {"plus_zero", report.degeneracy.plus_zero},
                     {"interior", report.degeneracy.interior}};
  j["strict_complementarity"] = report.strict_complementarity;
  j["cauchy_tail"] = report.cauchy_tail ? json(*report.cauchy_tail) : json(nullptr);
  j["label"] = report.label;
  return j.dump(2) + "\n";
}

StationarityReport parse_report_json(std::string_view text) {
  StationarityReport r;
  try {
    const json j = json::parse(text);
    r.eps_final = j.at("eps_final").get<double>();
    const auto x = j.at("x_final").get<std::vector<double>>();
    r.x_final = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    r.projection_residual = j.at("projection_residual").get<double>();
    r.comp_product_error = j.at("comp_product_error").get<double>();
    const json& d = j.at("degeneracy");
    r.degeneracy.tol = d.at("tol").get<double>();
    r.degeneracy.zero_plus = d.at("zero_plus").get<std::vector<int>>();
    r.degeneracy.zero_zero = d.at("zero_zero").get<std::vector<int>>();
    r.degeneracy.plus_zero = d.at("plus_zero").get<std::vector<int>>();
    r.degeneracy.interior = d.at("interior").get<std::vector<int>>();
    r.strict_complementarity = j.at("strict_complementarity").get<bool>();
    if (!j.at("cauchy_tail").is_null()) r.cauchy_tail = j.at("cauchy_tail").get<double>();
    r.label = j.at("label").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("malformed report: {}", e.what()));
  }
  return r;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  cfg.verbosity = verbosity_from_env(err);

  CLI::App app{"Stationary Nash equilibria of multi-leader multi-follower games", "mlmfg"};
  app.require_subcommand(1);
  CLI::App* solve = app.add_subcommand("solve", "run the eps-homotopy and write trajectory.csv, report.json, summary.txt");
  CLI::App* check = app.add_subcommand("check", "run the invariant and oracle cross-validation suites");
  CLI::App* trace = app.add_subcommand("trace", "emit a plot-ready CSV trace of x, y or the residuals");

  for (CLI::App* sub : {solve, check, trace}) {
    CLI::Option* inst = sub->add_option("--instance", cfg.instance, "instance file (JSON) or builtin:NAME");
    CLI::Option* builtin = sub->add_option("--builtin", cfg.builtin, "builtin instance")
                               ->check(CLI::IsMember({std::string(kBuiltinHoriFukushima)}));
    inst->excludes(builtin);
    sub->add_option("--eps0", cfg.schedule.eps0, "initial smoothing parameter")->check(CLI::PositiveNumber);
    sub->add_option("--ratio", cfg.schedule.ratio, "eps decay ratio in (0, 1)");
    sub->add_option("--steps", cfg.schedule.steps, "number of eps values")->check(CLI::PositiveNumber);
    sub->add_option("--x0", cfg.x0, "initial leader strategies v1,v2,...")->delimiter(',');
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.seed, "seed for randomized checks");
    sub->add_flag("--retry-halve", cfg.retry_halve, "retry a failed eps step once through the midpoint");
  }
  check->add_option("--from-report", cfg.from_report, "recompute a stored report.json and compare");
  trace->add_option("--quantity", cfg.quantity, "x, y or residuals")
      ->required()
      ->check(CLI::IsMember({"x", "y", "residuals"}));
  trace->add_option("--trajectory", cfg.trajectory, "existing trajectory.csv (solved inline when absent)");

  std::vector<const char*> argv{"mlmfg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    cfg.schedule.check();
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(cfg, out, err);
    if (check->parsed()) return cmd_check(cfg, out, err);
    return cmd_trace(cfg, out, err);
  } catch (const Failure& f) {
    err << "error: " << f.message << '\n';
    return f.code;
  } catch (const SolverError& e) {
    err << "error: solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace mlmfg::cli
