#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace choreo {

inline constexpr double kPeakThreshold = 0.1;

/// Normalised autocorrelation r[0..max_lag] (r[0] = 1) and its peaks.
struct Correlogram {
    std::vector<double> values;
    std::vector<std::size_t> peak_lags;  // ascending

    std::size_t max_lag() const { return values.empty() ? 0 : values.size() - 1; }
};

/// Strict interior local maxima with value above `threshold`.
std::vector<std::size_t> find_peaks(std::span<const double> values, double threshold = kPeakThreshold);

/// r[l] = sum_t (x[t] - m)(x[t + l] - m) / sum_t (x[t] - m)^2.
/// Requires size > max_lag >= 1; throws DegenerateInputError when the
/// sequence has no variance.
Correlogram autocorrelate(std::span<const double> sequence, std::size_t max_lag);

}  // namespace choreo
