#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mmt {

/// Process exit statuses.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitInput = 3,
  kExitNumerical = 4,
  kExitIo = 5,
};

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

/// FNV-1a 64-bit digest of a file, as 16 lowercase hex digits.
std::string file_digest(const std::string& path);

}  // namespace mmt
