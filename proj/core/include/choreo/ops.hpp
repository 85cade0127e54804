#pragma once

#include "choreo/tensor.hpp"

#include <cstddef>

namespace choreo {

/// Shape of a causal 1-D convolution. Weights are stored as an
/// out_channels x (in_channels * kernel_size) tensor with element
/// (o, i * kernel_size + k); tap k reads input frame t - (kernel_size - 1 - k) * dilation.
/// Bias is out_channels x 1.
struct ConvSpec {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_size = 1;
    std::size_t dilation = 1;

    /// Throws InvalidArgument unless kernel is 1 or 3, dilation >= 1 and
    /// kernel 1 implies dilation 1.
    void validate() const;
    /// Frames of history one output reads beyond the current frame.
    std::size_t history() const noexcept { return (kernel_size - 1) * dilation; }
};

enum class Activation { Tanh, Sigmoid, Relu };

/// Causal dilated convolution realised by left zero-padding. Output frame t
/// is accumulated in a fixed (tap, input channel) order, so its bits depend
/// only on input frames <= t and never on the sequence length.
template <typename T>
Tensor2D<T> conv1d_causal(const Tensor2D<T>& input, const ConvSpec& spec,
                          const Tensor2D<T>& weights, const Tensor2D<T>& bias);

/// Per-frame linear map (kernel-1 convolution).
template <typename T>
Tensor2D<T> pointwise_affine(const Tensor2D<T>& input, const Tensor2D<T>& weights,
                             const Tensor2D<T>& bias);

template <typename T>
Tensor2D<T> activate(const Tensor2D<T>& input, Activation kind);

template <typename T>
T activate(T x, Activation kind);

/// Mean absolute difference.
template <typename T>
T l1_loss(const Tensor2D<T>& pred, const Tensor2D<T>& target);

namespace detail {

/// Accumulates gradients of a causal convolution. grad_input may be null
/// when the input gradient is not needed.
template <typename T>
void conv1d_causal_backward(const Tensor2D<T>& input, const ConvSpec& spec,
                            const Tensor2D<T>& weights, const Tensor2D<T>& grad_output,
                            Tensor2D<T>* grad_input, Tensor2D<T>& grad_weights,
                            Tensor2D<T>& grad_bias);

}  // namespace detail

}  // namespace choreo
