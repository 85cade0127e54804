#pragma once

#include "choreo/mel.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace choreo::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Mel features as L2D1 plus a JSON sidecar with fps and sample rate.
void write_mel_sequence(const std::filesystem::path& path, const MelSequence& mel);
MelSequence read_mel_sequence(const std::filesystem::path& path);

/// WAV -> resample to `sample_rate` -> mel at `fps`.
MelSequence audio_features(const std::filesystem::path& wav, double fps, double sample_rate);

}  // namespace choreo::cli
