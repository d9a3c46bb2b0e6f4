#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rlreach::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// `args` excludes the program name. Never throws; maps errors onto exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rlreach::cli
