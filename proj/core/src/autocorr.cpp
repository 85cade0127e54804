#include "choreo/autocorr.hpp"

#include "choreo/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace choreo {

std::vector<std::size_t> find_peaks(std::span<const double> values, double threshold) {
    std::vector<std::size_t> peaks;
    for (std::size_t l = 1; l + 1 < values.size(); ++l) {
        if (values[l] > threshold && values[l] > values[l - 1] && values[l] > values[l + 1]) {
            peaks.push_back(l);
        }
    }
    return peaks;
}

Correlogram autocorrelate(std::span<const double> sequence, std::size_t max_lag) {
    const std::size_t n = sequence.size();
    if (max_lag < 1 || n <= max_lag) {
        throw InvalidArgument("autocorrelate: need length > max_lag >= 1");
    }
    for (double v : sequence) {
        if (!std::isfinite(v)) throw NumericError("autocorrelate: non-finite sample");
    }

    const double mean = std::accumulate(sequence.begin(), sequence.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(n);
    double energy = 0.0;
    double scale = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        centered[t] = sequence[t] - mean;
        energy += centered[t] * centered[t];
        scale = std::max(scale, std::abs(sequence[t]));
    }
    // Rounding leaves ~eps-sized residue for a constant input.
    const double floor = 1e-24 * static_cast<double>(n) * std::max(1.0, scale * scale);
    if (!(energy > floor)) {
        throw DegenerateInputError("autocorrelate: sequence has zero variance");
    }

    Correlogram out;
    out.values.resize(max_lag + 1);
    out.values[0] = 1.0;
    for (std::size_t l = 1; l <= max_lag; ++l) {
        double acc = 0.0;
        for (std::size_t t = 0; t + l < n; ++t) acc += centered[t] * centered[t + l];
        out.values[l] = acc / energy;
    }
    out.peak_lags = find_peaks(out.values);
    return out;
}

}  // namespace choreo
