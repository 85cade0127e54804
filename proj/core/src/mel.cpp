#include "choreo/mel.hpp"

#include "choreo/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

namespace choreo {

namespace {

// FFTW planning is not thread-safe; execution with a shared plan is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* input() { return in_; }

    /// Magnitude of bins 0..n/2 after executing on input().
    void magnitude(std::vector<double>& mag) {
        fftw_execute(plan_);
        mag.resize(n_ / 2 + 1);
        for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(out_[k][0], out_[k][1]);
    }

private:
    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

std::vector<double> mel_edges_hz(double sample_rate, std::size_t n_mels) {
    const double top = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t j = 0; j < edges.size(); ++j) {
        edges[j] = mel_to_hz(top * static_cast<double>(j) / static_cast<double>(n_mels + 1));
    }
    return edges;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_band_centers(double sample_rate, std::size_t n_mels) {
    const auto edges = mel_edges_hz(sample_rate, n_mels);
    return {edges.begin() + 1, edges.end() - 1};
}

Tensor2D<double> mel_filterbank(double sample_rate, std::size_t n_fft, std::size_t n_mels) {
    if (!(sample_rate > 0.0)) throw InvalidArgument("mel_filterbank: sample rate must be positive");
    if (n_mels == 0 || n_fft < 4 || n_mels >= n_fft / 2) {
        throw InvalidArgument("mel_filterbank: need 0 < n_mels < n_fft / 2");
    }
    const std::size_t bins = n_fft / 2 + 1;
    const auto edges = mel_edges_hz(sample_rate, n_mels);

    Tensor2D<double> bank(n_mels, bins);
    for (std::size_t b = 0; b < n_mels; ++b) {
        const double lo = edges[b];
        const double mid = edges[b + 1];
        const double hi = edges[b + 2];
        bool any = false;
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
            const double rise = (f - lo) / (mid - lo);
            const double fall = (hi - f) / (hi - mid);
            const double w = std::max(0.0, std::min(rise, fall));
            bank(b, k) = w;
            any = any || w > 0.0;
        }
        if (!any) {
            throw DegenerateInputError("mel_filterbank: band " + std::to_string(b) +
                                       " covers no FFT bin; too many bands for this resolution");
        }
    }
    return bank;
}

std::size_t mel_frame_count(std::size_t num_samples, double sample_rate, double fps) {
    const long double frames = static_cast<long double>(num_samples) * fps / sample_rate;
    return static_cast<std::size_t>(std::floor(frames + 1e-9L));
}

MelSequence mel_spectrogram(const AudioClip& audio, double fps, std::size_t n_fft, std::size_t n_mels) {
    audio.validate();
    if (audio.samples.empty()) throw InvalidArgument("mel_spectrogram: empty audio");
    if (!(fps > 0.0)) throw InvalidArgument("mel_spectrogram: fps must be positive");
    if (audio.sample_rate < 2048.0) throw InvalidArgument("mel_spectrogram: sample rate must be >= 2048 Hz");
    const std::size_t frames = mel_frame_count(audio.samples.size(), audio.sample_rate, fps);
    if (frames == 0) throw InvalidArgument("mel_spectrogram: clip shorter than one video frame");

    const auto bank = mel_filterbank(audio.sample_rate, n_fft, n_mels);
    const std::size_t bins = n_fft / 2 + 1;

    std::vector<double> window(n_fft);
    for (std::size_t n = 0; n < n_fft; ++n) {
        window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(n_fft));
    }

    RealFft fft(n_fft);
    std::vector<double> mag;
    Tensor2D<double> energy(n_mels, frames);
    const auto total = static_cast<std::ptrdiff_t>(audio.samples.size());
    const auto half = static_cast<std::ptrdiff_t>(n_fft / 2);

    for (std::size_t i = 0; i < frames; ++i) {
        const auto center = static_cast<std::ptrdiff_t>(
            std::llround(static_cast<double>(i) * audio.sample_rate / fps));
        double* in = fft.input();
        for (std::size_t n = 0; n < n_fft; ++n) {
            const std::ptrdiff_t s = center - half + static_cast<std::ptrdiff_t>(n);
            in[n] = (s >= 0 && s < total) ? audio.samples[static_cast<std::size_t>(s)] * window[n] : 0.0;
        }
        fft.magnitude(mag);
        for (std::size_t b = 0; b < n_mels; ++b) {
            const auto w = bank.row(b);
            double e = 0.0;
            for (std::size_t k = 0; k < bins; ++k) e += w[k] * mag[k];
            energy(b, i) = std::log1p(e);
        }
    }

    const auto [lo_it, hi_it] = std::minmax_element(energy.data().begin(), energy.data().end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    Tensor features(n_mels, frames);
    for (std::size_t n = 0; n < energy.size(); ++n) {
        features.data()[n] = range > 0.0 ? static_cast<float>((energy.data()[n] - lo) / range) : 0.0f;
    }
    return MelSequence{std::move(features), fps, audio.sample_rate};
}

}  // namespace choreo
