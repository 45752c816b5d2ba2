#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace acdii::cli {

enum ExitCode { kOk = 0, kNumerical = 1, kInput = 2 };

/// Runs one command. args excludes the program name, e.g. {"invert", "dir", "--config", "c.json"}.
/// Failures print a single JSON object {"error": {"kind", "message"}} on err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace acdii::cli
