#include "choreo/tensor.hpp"

#include "choreo/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace choreo {

template <typename T>
Tensor2D<T>::Tensor2D(std::size_t channels, std::size_t frames, T fill)
    : channels_(channels), frames_(frames), data_(channels * frames, fill) {
    if (channels == 0 || frames == 0) {
        throw DimensionError("tensor dimensions must be positive");
    }
}

template <typename T>
Tensor2D<T>::Tensor2D(std::size_t channels, std::size_t frames, std::vector<T> data)
    : channels_(channels), frames_(frames), data_(std::move(data)) {
    if (channels == 0 || frames == 0) {
        throw DimensionError("tensor dimensions must be positive");
    }
    if (data_.size() != channels * frames) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(channels) + "x" +
                             std::to_string(frames));
    }
}

template <typename T>
std::vector<T> Tensor2D<T>::column(std::size_t t) const {
    std::vector<T> out(channels_);
    for (std::size_t c = 0; c < channels_; ++c) out[c] = (*this)(c, t);
    return out;
}

template <typename T>
void Tensor2D<T>::set_column(std::size_t t, std::span<const T> values) {
    if (values.size() != channels_ || t >= frames_) {
        throw DimensionError("set_column: shape mismatch");
    }
    for (std::size_t c = 0; c < channels_; ++c) (*this)(c, t) = values[c];
}

template <typename T>
Tensor2D<T> Tensor2D<T>::slice_frames(std::size_t first, std::size_t count) const {
    if (count == 0 || first + count > frames_) {
        throw DimensionError("slice_frames: range out of bounds");
    }
    Tensor2D out(channels_, count);
    for (std::size_t c = 0; c < channels_; ++c) {
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(c * frames_ + first), count,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(c * count));
    }
    return out;
}

template <typename T>
Tensor2D<T> Tensor2D<T>::slice_channels(std::size_t first, std::size_t count) const {
    if (count == 0 || first + count > channels_) {
        throw DimensionError("slice_channels: range out of bounds");
    }
    std::vector<T> out(data_.begin() + static_cast<std::ptrdiff_t>(first * frames_),
                       data_.begin() + static_cast<std::ptrdiff_t>((first + count) * frames_));
    return Tensor2D(count, frames_, std::move(out));
}

template <typename T>
bool Tensor2D<T>::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void require_finite(const Tensor2D<T>& tensor, const char* what) {
    if (!tensor.all_finite()) {
        throw NumericError(std::string(what) + ": non-finite value");
    }
}

template <typename T>
Tensor2D<T> concat_frames(const Tensor2D<T>& a, const Tensor2D<T>& b) {
    if (a.channels() != b.channels()) {
        throw DimensionError("concat_frames: channel mismatch");
    }
    Tensor2D<T> out(a.channels(), a.frames() + b.frames());
    for (std::size_t c = 0; c < a.channels(); ++c) {
        auto dst = out.row(c);
        std::copy(a.row(c).begin(), a.row(c).end(), dst.begin());
        std::copy(b.row(c).begin(), b.row(c).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.frames()));
    }
    return out;
}

template class Tensor2D<float>;
template class Tensor2D<double>;
template void require_finite(const Tensor2D<float>&, const char*);
template void require_finite(const Tensor2D<double>&, const char*);
template Tensor2D<float> concat_frames(const Tensor2D<float>&, const Tensor2D<float>&);
template Tensor2D<double> concat_frames(const Tensor2D<double>&, const Tensor2D<double>&);

}  // namespace choreo
