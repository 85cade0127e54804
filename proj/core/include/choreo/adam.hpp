#pragma once

#include "choreo/tensor.hpp"

#include <cstdint>

namespace choreo {

struct AdamConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam moments. Moments are created lazily (zero) on the
/// first step that sees a parameter.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    NamedTensors<float> first_moment;
    NamedTensors<float> second_moment;
};

/// One Adam update of every parameter in `params`. Throws InvalidArgument if
/// a parameter has no gradient and DimensionError on shape mismatch.
/// Mutates `params` in place: callers must not read them concurrently.
void adam_step(NamedTensors<float>& params, const NamedTensors<float>& grads, AdamState& state);

}  // namespace choreo
