#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mlmfg/model.hpp"

namespace mlmfg {

/// Current instance-file schema version.
inline constexpr int kInstanceSchemaVersion = 1;

/// Parses an instance document (JSON). Unknown keys are accepted and
/// reported through `warnings` when non-null. Throws ParseError naming the
/// line (syntax errors) or the field path (schema errors).
ProblemInstance parse_instance(std::string_view text, std::vector<std::string>* warnings = nullptr);
std::string format_instance(const ProblemInstance& inst);

/// Throws ParseError naming `path` when the file cannot be read.
ProblemInstance load_instance(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
void save_instance(const ProblemInstance& inst, const std::filesystem::path& path);

}  // namespace mlmfg
