#pragma once

#include "choreo/audio.hpp"
#include "choreo/tensor.hpp"

#include <cstddef>
#include <vector>

namespace choreo {

inline constexpr std::size_t kMelBands = 80;
inline constexpr std::size_t kFftSize = 1024;

/// Mel spectrogram sampled at the video frame rate.
struct MelSequence {
    Tensor features;  // n_mels x frames, values in [0, 1]
    double fps = 0.0;
    double sample_rate = 0.0;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Peak (center) frequency in Hz of each triangular band.
std::vector<double> mel_band_centers(double sample_rate, std::size_t n_mels = kMelBands);

/// n_mels x (n_fft / 2 + 1) triangular filters on the 2595*log10(1 + f/700)
/// scale spanning 0 Hz to Nyquist, peak weight 1.
Tensor2D<double> mel_filterbank(double sample_rate, std::size_t n_fft = kFftSize,
                                std::size_t n_mels = kMelBands);

/// floor(duration * fps) for `num_samples` at `sample_rate`.
std::size_t mel_frame_count(std::size_t num_samples, double sample_rate, double fps);

/// Frame i is a Hann-windowed n_fft-sample window centred at sample
/// round(i * sample_rate / fps), zero-padded at the clip edges. Band energies
/// of the magnitude spectrum are compressed with log(1 + E) and min-max
/// scaled to [0, 1] over the whole clip (a constant clip maps to zeros).
MelSequence mel_spectrogram(const AudioClip& audio, double fps, std::size_t n_fft = kFftSize,
                            std::size_t n_mels = kMelBands);

}  // namespace choreo
