#pragma once

#include <filesystem>
#include <vector>

namespace choreo {

/// Mono audio in [-1, 1].
struct AudioClip {
    std::vector<double> samples;
    double sample_rate = 0.0;

    double duration_seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
    /// Throws InvalidArgument on a non-positive rate or non-finite sample.
    void validate() const;
};

/// Linear interpolation onto a new rate. Output length is
/// round(N * target_rate / sample_rate) (at least one sample).
AudioClip resample_linear(const AudioClip& audio, double target_rate);

enum class WavEncoding { Pcm16, Float32 };

/// Reads PCM 16-bit or IEEE float 32-bit WAV; multi-channel input is
/// downmixed by averaging.
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& audio,
               WavEncoding encoding = WavEncoding::Pcm16);

}  // namespace choreo
