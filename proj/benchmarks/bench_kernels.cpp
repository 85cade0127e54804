#include "choreo/audio.hpp"
#include "choreo/mel.hpp"
#include "choreo/model.hpp"
#include "choreo/ops.hpp"
#include "choreo/training.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace choreo;

namespace {

Tensor filled(std::size_t channels, std::size_t frames, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    Tensor t(channels, frames);
    for (auto& v : t.data()) v = u(rng);
    return t;
}

}  // namespace

static void BM_Conv1dCausal(benchmark::State& state) {
    const auto channels = static_cast<std::size_t>(state.range(0));
    const auto frames = static_cast<std::size_t>(state.range(1));
    const ConvSpec spec{channels, 2 * channels, 3, 9};
    const Tensor x = filled(channels, frames, 1, -1, 1);
    const Tensor w = filled(2 * channels, 3 * channels, 2, -0.1f, 0.1f);
    const Tensor b = filled(2 * channels, 1, 3);
    for (auto _ : state) benchmark::DoNotOptimize(conv1d_causal(x, spec, w, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * channels * 3 * channels * frames));
}
BENCHMARK(BM_Conv1dCausal)->Args({64, 128})->Args({256, 128})->Args({512, 64})->Unit(benchmark::kMicrosecond);

static void BM_TeacherForcedForward(benchmark::State& state) {
    const auto widths = static_cast<std::size_t>(state.range(0));
    const auto frames = static_cast<std::size_t>(state.range(1));
    const auto params = ModelParams::initialize(ModelConfig::with_widths(widths, widths / 2), 1);
    const Tensor skeleton = filled(kFrameDims, frames, 4);
    const Tensor mel = filled(kMelBands, frames, 5);
    for (auto _ : state) benchmark::DoNotOptimize(teacher_forced_forward(params, skeleton, mel));
}
BENCHMARK(BM_TeacherForcedForward)->Args({64, 64})->Args({256, 128})->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
    auto params = ModelParams::initialize(ModelConfig::with_widths(64, 32), 1);
    AdamState adam;
    TrainingConfig config;
    config.batch_size = 4;
    std::vector<Window> batch;
    for (std::uint64_t i = 0; i < 4; ++i) batch.push_back(Window{filled(kFrameDims, 64, 6 + i), filled(kMelBands, 64, 9 + i), 0, 0});
    for (auto _ : state) benchmark::DoNotOptimize(train_step(params, adam, batch, config));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

static void BM_MelSpectrogram(benchmark::State& state) {
    const double rate = 22050.0;
    AudioClip clip{std::vector<double>(static_cast<std::size_t>(rate * static_cast<double>(state.range(0)))), rate};
    for (std::size_t n = 0; n < clip.samples.size(); ++n) {
        clip.samples[n] = 0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * static_cast<double>(n) / rate);
    }
    for (auto _ : state) benchmark::DoNotOptimize(mel_spectrogram(clip, 30.0));
    state.SetLabel(std::to_string(state.range(0)) + " s of audio");
}
BENCHMARK(BM_MelSpectrogram)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
