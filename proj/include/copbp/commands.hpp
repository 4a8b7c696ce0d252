#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "copbp/config.hpp"

namespace copbp {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitUserError = 1, kExitNumericalFailure = 2 };

/// Names accepted by run().
const std::vector<std::string>& command_names();

/// Runs one pipeline command, writing its artifacts and manifest-<command>.json into the
/// configured output directory. Failures are reported as error.json there
/// and on `err`; the return value is an ExitCode.
int run(const std::string& command, const RunConfig& config, std::ostream& out, std::ostream& err);

struct TransformRequest {
  std::string kind;  // "lag-diff" or "peace-years"
  std::filesystem::path input;
  std::filesystem::path output;
  std::string column;  // differenced column, or the event column for peace-years
  std::string group;
  std::string time;
  std::optional<std::string> name;  // new column name
};

/// Appends a derived column to a CSV panel.
int run_transform(const TransformRequest& request, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace copbp
