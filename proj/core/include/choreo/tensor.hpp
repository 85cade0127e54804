#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace choreo {

/// Channel x time matrix stored channel-major: element (c, t) lives at
/// data[c * frames + t].
template <typename T>
class Tensor2D {
public:
    using value_type = T;

    Tensor2D() = default;
    Tensor2D(std::size_t channels, std::size_t frames, T fill = T{0});
    Tensor2D(std::size_t channels, std::size_t frames, std::vector<T> data);

    std::size_t channels() const noexcept { return channels_; }
    std::size_t frames() const noexcept { return frames_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t c, std::size_t t) { return data_[c * frames_ + t]; }
    const T& operator()(std::size_t c, std::size_t t) const { return data_[c * frames_ + t]; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::span<T> row(std::size_t c) { return {data_.data() + c * frames_, frames_}; }
    std::span<const T> row(std::size_t c) const { return {data_.data() + c * frames_, frames_}; }

    /// Column t as a fresh vector.
    std::vector<T> column(std::size_t t) const;
    void set_column(std::size_t t, std::span<const T> values);

    /// Columns [first, first + count).
    Tensor2D slice_frames(std::size_t first, std::size_t count) const;
    /// Rows [first, first + count).
    Tensor2D slice_channels(std::size_t first, std::size_t count) const;

    bool all_finite() const noexcept;

    template <typename U>
    Tensor2D<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor2D<U>(channels_, frames_, std::move(out));
    }

    friend bool operator==(const Tensor2D&, const Tensor2D&) = default;

private:
    std::size_t channels_ = 0;
    std::size_t frames_ = 0;
    std::vector<T> data_;
};

using Tensor = Tensor2D<float>;

/// Parameters, gradients and optimizer moments keyed by parameter name.
template <typename T>
using NamedTensors = std::map<std::string, Tensor2D<T>>;

/// Throws NumericError naming `what` if any element is NaN or infinite.
template <typename T>
void require_finite(const Tensor2D<T>& tensor, const char* what);

template <typename U, typename T>
NamedTensors<U> cast_all(const NamedTensors<T>& tensors) {
    NamedTensors<U> out;
    for (const auto& [name, tensor] : tensors) out.emplace(name, tensor.template cast<U>());
    return out;
}

/// Concatenates tensors with identical channel counts along time.
template <typename T>
Tensor2D<T> concat_frames(const Tensor2D<T>& a, const Tensor2D<T>& b);

extern template class Tensor2D<float>;
extern template class Tensor2D<double>;

}  // namespace choreo
