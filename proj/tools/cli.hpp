#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace palmline::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;       // bad flags, unreadable inputs, other failures
inline constexpr int kExitSegment = 2;     // DegenerateImage / EmptyMask / RoiTooSmall in `segment`
inline constexpr int kExitWeights = 3;     // MissingParameter / ShapeMismatch / unreadable weights
inline constexpr int kExitSkipped = 4;     // `extract` skipped one or more images
inline constexpr int kExitSweep = 5;       // ClassTooSmall / parse errors in `sweep`

/// Runs the command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace palmline::cli
