#pragma once

#include <filesystem>

namespace imagine::cli {

// Exit codes per error class.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMissingArtifact = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitNumeric = 5;

// IMAGINE_RL_OUT when set, otherwise "runs".
std::filesystem::path output_root();

int run_cli(int argc, const char* const* argv);

}  // namespace imagine::cli
