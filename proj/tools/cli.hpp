#pragma once

#include <iosfwd>

namespace qoie::cli {

// Exit codes: 0 success, 1 runtime or data failure, 2 usage error.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qoie::cli
