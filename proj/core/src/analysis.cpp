#include "choreo/analysis.hpp"

#include "choreo/error.hpp"

#include <cmath>
#include <limits>

namespace choreo {

BeatGrid BeatGrid::from_bpm(double bpm, double fps) {
    if (!(bpm > 0.0) || !(fps > 0.0)) throw InvalidArgument("beat grid: bpm and fps must be positive");
    BeatGrid g{60.0 * fps / bpm, {}};
    g.validate();
    return g;
}

BeatGrid BeatGrid::from_beats(std::vector<double> beat_frames) {
    if (beat_frames.size() < 2) throw InvalidArgument("beat grid: need at least two beats");
    BeatGrid g{(beat_frames.back() - beat_frames.front()) / static_cast<double>(beat_frames.size() - 1),
               std::move(beat_frames)};
    g.validate();
    return g;
}

void BeatGrid::validate() const {
    if (!(period > 1.0) || !std::isfinite(period)) throw InvalidArgument("beat grid: period must exceed one frame");
    for (std::size_t i = 1; i < beats.size(); ++i) {
        if (!(beats[i] > beats[i - 1])) throw InvalidArgument("beat grid: beats must be strictly increasing");
    }
}

Correlogram axis_autocorrelation(const SkeletonSequence& seq, Axis axis, std::size_t max_lag) {
    const std::size_t frames = seq.length();
    if (frames <= max_lag) throw InvalidArgument("motion autocorrelation: sequence shorter than max lag");
    const std::size_t offset = axis == Axis::X ? 0 : 1;

    std::vector<double> sum(max_lag + 1, 0.0);
    std::size_t used = 0;
    std::vector<double> trajectory(frames);
    for (std::size_t j = 0; j < kJointCount; ++j) {
        for (std::size_t t = 0; t < frames; ++t) trajectory[t] = seq.frames(2 * j + offset, t);
        try {
            const auto r = autocorrelate(trajectory, max_lag);
            for (std::size_t l = 0; l <= max_lag; ++l) sum[l] += r.values[l];
            ++used;
        } catch (const DegenerateInputError&) {
            // joint does not move on this axis
        }
    }
    if (used == 0) {
        throw DegenerateInputError(std::string("motion autocorrelation: no joint moves along ") +
                                   (axis == Axis::X ? "x" : "y"));
    }
    Correlogram out;
    out.values.resize(max_lag + 1);
    for (std::size_t l = 0; l <= max_lag; ++l) out.values[l] = sum[l] / static_cast<double>(used);
    out.peak_lags = find_peaks(out.values);
    return out;
}

AxisCorrelograms motion_autocorrelation(const SkeletonSequence& seq, std::size_t max_lag) {
    return {axis_autocorrelation(seq, Axis::X, max_lag), axis_autocorrelation(seq, Axis::Y, max_lag)};
}

AxisVerdict beat_alignment(const Correlogram& correlogram, const BeatGrid& grid, double tolerance) {
    grid.validate();
    AxisVerdict best;
    if (correlogram.peak_lags.empty()) return best;

    double best_distance = std::numeric_limits<double>::infinity();
    const std::size_t candidates = std::min<std::size_t>(2, correlogram.peak_lags.size());
    for (std::size_t p = 0; p < candidates; ++p) {
        const std::size_t lag = correlogram.peak_lags[p];
        for (std::size_t multiple = 1; multiple <= 2; ++multiple) {
            const double offset = static_cast<double>(lag) - static_cast<double>(multiple) * grid.period;
            if (std::abs(offset) <= tolerance) {
                return AxisVerdict{AlignmentStatus::Matched, p + 1, lag, multiple, offset};
            }
            if (std::abs(offset) < best_distance) {
                best_distance = std::abs(offset);
                best = AxisVerdict{AlignmentStatus::Unmatched, p + 1, lag, multiple, offset};
            }
        }
    }
    return best;
}

MotionAutocorrReport analyze_motion(const SkeletonSequence& seq, const BeatGrid& grid, std::size_t max_lag,
                                    double tolerance) {
    grid.validate();
    MotionAutocorrReport report;
    report.grid = grid;
    report.fps = seq.fps;
    report.max_lag = max_lag;
    report.tolerance = tolerance;
    for (Axis axis : {Axis::X, Axis::Y}) {
        AxisReport& out = axis == Axis::X ? report.x : report.y;
        try {
            out.correlogram = axis_autocorrelation(seq, axis, max_lag);
            out.verdict = beat_alignment(*out.correlogram, grid, tolerance);
        } catch (const DegenerateInputError&) {
            out.correlogram.reset();
        }
    }
    return report;
}

std::string to_string(AlignmentStatus status) {
    switch (status) {
        case AlignmentStatus::Matched:
            return "matched";
        case AlignmentStatus::Unmatched:
            return "unmatched";
        case AlignmentStatus::NoPeak:
            return "no_peak";
    }
    return "unknown";
}

}  // namespace choreo
