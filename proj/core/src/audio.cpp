#include "choreo/audio.hpp"

#include "choreo/error.hpp"

#include <algorithm>
#include <cmath>

namespace choreo {

void AudioClip::validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw InvalidArgument("audio: sample rate must be positive");
    }
    for (double s : samples) {
        if (!std::isfinite(s)) throw NumericError("audio: non-finite sample");
    }
}

AudioClip resample_linear(const AudioClip& audio, double target_rate) {
    audio.validate();
    if (!(target_rate > 0.0)) throw InvalidArgument("resample: target rate must be positive");
    if (target_rate == audio.sample_rate || audio.samples.empty()) {
        return AudioClip{audio.samples, target_rate};
    }

    const std::size_t n_in = audio.samples.size();
    const auto n_out = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(n_in) * target_rate / audio.sample_rate)));
    const double step = audio.sample_rate / target_rate;

    AudioClip out{std::vector<double>(n_out), target_rate};
    for (std::size_t j = 0; j < n_out; ++j) {
        const double pos = static_cast<double>(j) * step;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= n_in) {
            out.samples[j] = audio.samples[n_in - 1];
            continue;
        }
        const double frac = pos - static_cast<double>(i);
        out.samples[j] = audio.samples[i] + frac * (audio.samples[i + 1] - audio.samples[i]);
    }
    return out;
}

}  // namespace choreo
