#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tsqrf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns 0 on success, 1 on usage errors and 2 on runtime
/// failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsqrf::cli
