#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qlfr::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kBackendFailure = 3;
inline constexpr int kDataError = 4;

/// Runs one subcommand (prepare, run, rationales, export, eval, cache).
/// Results go to `out`; JSON-line logs and the one-line error go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

}  // namespace qlfr::cli
