#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mlmfg/homotopy.hpp"

namespace mlmfg::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitValidation = 3,  // invalid instance or unreadable/unwritable files
  kExitSolver = 4,
  kExitCheck = 5,
};

inline constexpr std::string_view kBuiltinHoriFukushima = "hori-fukushima-ext";

/// Entry point behind the `mlmfg` executable. `args` excludes the program
/// name. Verbosity comes from MLMFG_LOG (quiet, warn, info, debug or 0-3).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Header plus one row per record, 17 significant digits. Wall times are
/// left out so that identical runs produce identical files.
std::string trajectory_csv(const HomotopyTrajectory& trajectory);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a header column; throws std::out_of_range when absent.
  std::size_t column(std::string_view name) const;
  /// Columns named prefix_1, prefix_2, ... in order.
  std::vector<std::size_t> numbered_columns(std::string_view prefix) const;
};

/// Throws ParseError on ragged rows or non-numeric cells.
CsvTable parse_csv(std::string_view text);

/// Plot-ready trace for quantity x, y or residuals: k, eps, value columns.
std::string trace_csv(const CsvTable& trajectory, std::string_view quantity);

std::string report_json(const StationarityReport& report, const std::string& instance_label,
                        const Schedule& schedule);
StationarityReport parse_report_json(std::string_view text);

}  // namespace mlmfg::cli
