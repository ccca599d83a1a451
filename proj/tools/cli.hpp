#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace engage::cli {

/// Runs one `engage` invocation. args[0] is the program name. Returns the
/// process exit code: 0 success, 1 input/parse error, 2 internal
/// consistency error, 3 degenerate analytics.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// SHA-256 of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);

}  // namespace engage::cli
