#pragma once

#include <iosfwd>

namespace failscope {

/// Exit codes: 0 success, 2 configuration or parse errors, 3 runtime failures.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace failscope
