#pragma once

#include "choreo/autocorr.hpp"
#include "choreo/skeleton.hpp"

#include <optional>
#include <string>
#include <vector>

namespace choreo {

/// Beat period in frames, either from a tempo or from explicit beat frames.
struct BeatGrid {
    double period = 0.0;
    std::vector<double> beats;  // explicit beat frames, possibly empty

    /// period = 60 * fps / bpm.
    static BeatGrid from_bpm(double bpm, double fps);
    /// period = mean spacing of strictly increasing beat frames.
    static BeatGrid from_beats(std::vector<double> beat_frames);
    void validate() const;
};

enum class Axis { X, Y };

struct AxisCorrelograms {
    Correlogram x;
    Correlogram y;
};

/// Autocorrelates every joint trajectory on `axis`, averages the
/// correlograms of joints that move (in joint order) and re-detects peaks.
/// Throws DegenerateInputError when no joint moves on that axis.
Correlogram axis_autocorrelation(const SkeletonSequence& seq, Axis axis, std::size_t max_lag);

/// Both axes; throws if either axis is degenerate.
AxisCorrelograms motion_autocorrelation(const SkeletonSequence& seq, std::size_t max_lag);

enum class AlignmentStatus { Matched, Unmatched, NoPeak };

struct AxisVerdict {
    AlignmentStatus status = AlignmentStatus::NoPeak;
    std::size_t peak_index = 0;     // 1 or 2 (position among detected peaks), 0 if no peak
    std::size_t peak_lag = 0;
    std::size_t beat_multiple = 0;  // 1 or 2
    double offset = 0.0;            // peak_lag - beat_multiple * period
};

/// Checks whether the first or second peak lies within `tolerance` frames of
/// one or two beat periods. Unmatched verdicts report the closest candidate.
AxisVerdict beat_alignment(const Correlogram& correlogram, const BeatGrid& grid, double tolerance = 2.0);

struct AxisReport {
    std::optional<Correlogram> correlogram;  // empty when the axis does not move
    AxisVerdict verdict;
};

struct MotionAutocorrReport {
    AxisReport x;
    AxisReport y;
    BeatGrid grid;
    double fps = 30.0;
    std::size_t max_lag = 0;
    double tolerance = 2.0;
};

/// Per-axis analysis; a motionless axis is reported rather than thrown.
MotionAutocorrReport analyze_motion(const SkeletonSequence& seq, const BeatGrid& grid, std::size_t max_lag,
                                    double tolerance = 2.0);

std::string to_string(AlignmentStatus status);

}  // namespace choreo
