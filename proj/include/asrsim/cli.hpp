#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace asrsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataError = 2;

inline constexpr unsigned long long kDefaultSeed = 42;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs one command line (args[0] is the program name). Never throws; returns
/// the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling file and renames it into place, so a
/// failed command never leaves a partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace asrsim::cli
