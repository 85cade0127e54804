#include "choreo/ops.hpp"

#include "choreo/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace choreo {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::size_t kRowBlock = 6;

// 32-byte vectors via the GCC/Clang vector extension. Each lane performs
// the same multiply and add sequence, so results match scalar evaluation.
template <typename T>
struct Lanes {
    typedef T type __attribute__((vector_size(32)));
    static constexpr std::size_t count = 32 / sizeof(T);
};

template <typename T>
constexpr std::size_t column_block() {
    return 2 * Lanes<T>::count;
}

template <typename T>
void check_conv_shapes(const Tensor2D<T>& input, const ConvSpec& spec, const Tensor2D<T>& weights,
                       const Tensor2D<T>& bias) {
    spec.validate();
    if (input.channels() != spec.in_channels) {
        throw DimensionError("conv1d: input has " + std::to_string(input.channels()) +
                             " channels, expected " + std::to_string(spec.in_channels));
    }
    if (weights.channels() != spec.out_channels ||
        weights.frames() != spec.in_channels * spec.kernel_size) {
        throw DimensionError("conv1d: weight shape mismatch");
    }
    if (bias.channels() != spec.out_channels || bias.frames() != 1) {
        throw DimensionError("conv1d: bias shape mismatch");
    }
}

}  // namespace

void ConvSpec::validate() const {
    if (in_channels == 0 || out_channels == 0) {
        throw InvalidArgument("conv: channel counts must be positive");
    }
    if (kernel_size != 1 && kernel_size != 3) {
        throw InvalidArgument("conv: kernel size must be 1 or 3");
    }
    if (dilation == 0) throw InvalidArgument("conv: dilation must be positive");
    if (kernel_size == 1 && dilation != 1) {
        throw InvalidArgument("conv: kernel size 1 requires dilation 1");
    }
}

template <typename T>
Tensor2D<T> conv1d_causal(const Tensor2D<T>& input, const ConvSpec& spec,
                          const Tensor2D<T>& weights, const Tensor2D<T>& bias) {
    check_conv_shapes(input, spec, weights, bias);
    require_finite(input, "conv1d_causal input");

    constexpr std::size_t CB = column_block<T>();
    const std::size_t frames = input.frames();
    const std::size_t cin = spec.in_channels;
    const std::size_t cout = spec.out_channels;
    const std::size_t kernel = spec.kernel_size;
    const std::size_t history = spec.history();
    const std::size_t padded_frames = (frames + CB - 1) / CB * CB;
    const std::size_t row_len = history + padded_frames;

    // Zero-padded copy of the input: `history` zeros on the left, block
    // remainder on the right.
    std::vector<T> xp(cin * row_len, T{0});
    for (std::size_t i = 0; i < cin; ++i) {
        const auto src = input.row(i);
        std::copy(src.begin(), src.end(), xp.begin() + static_cast<std::ptrdiff_t>(i * row_len + history));
    }

    // Weights repacked per block of kRowBlock output rows as
    // [block][k * cin + i][row], rows beyond cout are zero.
    const std::size_t taps = kernel * cin;
    const std::size_t row_blocks = (cout + kRowBlock - 1) / kRowBlock;
    std::vector<T> wp(row_blocks * taps * kRowBlock, T{0});
    std::vector<T> bp(row_blocks * kRowBlock, T{0});
    for (std::size_t o = 0; o < cout; ++o) {
        const std::size_t block = o / kRowBlock;
        const std::size_t r = o % kRowBlock;
        bp[o] = bias(o, 0);
        for (std::size_t k = 0; k < kernel; ++k) {
            for (std::size_t i = 0; i < cin; ++i) {
                wp[(block * taps + k * cin + i) * kRowBlock + r] = weights(o, i * kernel + k);
            }
        }
    }

    Tensor2D<T> out(cout, frames);
    using V = typename Lanes<T>::type;
    constexpr std::size_t kVectors = CB / Lanes<T>::count;
    V acc[kRowBlock][kVectors];
    for (std::size_t block = 0; block < row_blocks; ++block) {
        const T* wblock = wp.data() + block * taps * kRowBlock;
        for (std::size_t t0 = 0; t0 < padded_frames; t0 += CB) {
            for (std::size_t r = 0; r < kRowBlock; ++r) {
                for (std::size_t v = 0; v < kVectors; ++v) acc[r][v] = bp[block * kRowBlock + r] + V{};
            }
            for (std::size_t k = 0; k < kernel; ++k) {
                const std::size_t offset = history - (kernel - 1 - k) * spec.dilation + t0;
                const T* wk = wblock + k * cin * kRowBlock;
                for (std::size_t i = 0; i < cin; ++i) {
                    const T* x = xp.data() + i * row_len + offset;
                    V xv[kVectors];
                    for (std::size_t v = 0; v < kVectors; ++v) {
                        std::memcpy(&xv[v], x + v * Lanes<T>::count, sizeof(V));
                    }
                    const T* w = wk + i * kRowBlock;
                    for (std::size_t r = 0; r < kRowBlock; ++r) {
                        const T wr = w[r];
                        for (std::size_t v = 0; v < kVectors; ++v) acc[r][v] = acc[r][v] + wr * xv[v];
                    }
                }
            }
            const std::size_t valid = std::min(CB, frames - std::min(frames, t0));
            for (std::size_t r = 0; r < kRowBlock; ++r) {
                const std::size_t o = block * kRowBlock + r;
                if (o >= cout) break;
                T lanes[CB];
                std::memcpy(lanes, acc[r], sizeof(lanes));
                std::copy_n(lanes, valid, out.row(o).data() + t0);
            }
        }
    }
    return out;
}

template <typename T>
Tensor2D<T> pointwise_affine(const Tensor2D<T>& input, const Tensor2D<T>& weights,
                             const Tensor2D<T>& bias) {
    const ConvSpec spec{input.channels(), weights.channels(), 1, 1};
    return conv1d_causal(input, spec, weights, bias);
}

template <typename T>
T activate(T x, Activation kind) {
    switch (kind) {
        case Activation::Tanh:
            return std::tanh(x);
        case Activation::Sigmoid:
            // Split on sign so exp never overflows.
            if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
            else {
                const T e = std::exp(x);
                return e / (T{1} + e);
            }
        case Activation::Relu:
            return x > T{0} ? x : T{0};
    }
    return x;
}

template <typename T>
Tensor2D<T> activate(const Tensor2D<T>& input, Activation kind) {
    Tensor2D<T> out = input;
    for (auto& v : out.data()) v = activate(v, kind);
    return out;
}

template <typename T>
T l1_loss(const Tensor2D<T>& pred, const Tensor2D<T>& target) {
    if (pred.channels() != target.channels() || pred.frames() != target.frames()) {
        throw DimensionError("l1_loss: shape mismatch");
    }
    const auto a = pred.data();
    const auto b = target.data();
    double sum = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) sum += std::abs(static_cast<double>(a[n]) - b[n]);
    return static_cast<T>(sum / static_cast<double>(a.size()));
}

namespace detail {

template <typename T>
void conv1d_causal_backward(const Tensor2D<T>& input, const ConvSpec& spec,
                            const Tensor2D<T>& weights, const Tensor2D<T>& grad_output,
                            Tensor2D<T>* grad_input, Tensor2D<T>& grad_weights,
                            Tensor2D<T>& grad_bias) {
    const std::size_t frames = input.frames();
    const auto cin = static_cast<Eigen::Index>(spec.in_channels);
    const auto cout = static_cast<Eigen::Index>(spec.out_channels);
    const auto kernel = static_cast<Eigen::Index>(spec.kernel_size);

    // Eigen picks its vector/scalar split from operand addresses, so every
    // operand and product lives in Eigen-owned (aligned) storage and results
    // are accumulated with plain loops. This keeps gradients independent of
    // where the tensors happen to be allocated.
    const RowMat<T> x = Eigen::Map<const RowMat<T>>(input.data().data(), cin, static_cast<Eigen::Index>(frames));
    const RowMat<T> gy =
        Eigen::Map<const RowMat<T>>(grad_output.data().data(), cout, static_cast<Eigen::Index>(frames));

    for (std::size_t o = 0; o < spec.out_channels; ++o) {
        T sum{0};
        for (std::size_t t = 0; t < frames; ++t) sum += grad_output(o, t);
        grad_bias(o, 0) += sum;
    }

    for (Eigen::Index k = 0; k < kernel; ++k) {
        const std::size_t shift = static_cast<std::size_t>(kernel - 1 - k) * spec.dilation;
        if (shift >= frames) continue;
        const auto n = static_cast<Eigen::Index>(frames - shift);
        const RowMat<T> gy_tail = gy.rightCols(n);
        const RowMat<T> x_head = x.leftCols(n);

        const RowMat<T> gw = gy_tail * x_head.transpose();
        for (Eigen::Index o = 0; o < cout; ++o) {
            for (Eigen::Index i = 0; i < cin; ++i) {
                grad_weights(static_cast<std::size_t>(o), static_cast<std::size_t>(i * kernel + k)) += gw(o, i);
            }
        }

        if (grad_input != nullptr) {
            RowMat<T> wt(cin, cout);
            for (Eigen::Index o = 0; o < cout; ++o) {
                for (Eigen::Index i = 0; i < cin; ++i) {
                    wt(i, o) = weights(static_cast<std::size_t>(o), static_cast<std::size_t>(i * kernel + k));
                }
            }
            const RowMat<T> gx = wt * gy_tail;
            for (Eigen::Index i = 0; i < cin; ++i) {
                auto row = grad_input->row(static_cast<std::size_t>(i));
                for (Eigen::Index t = 0; t < n; ++t) row[static_cast<std::size_t>(t)] += gx(i, t);
            }
        }
    }
}

template void conv1d_causal_backward(const Tensor2D<float>&, const ConvSpec&, const Tensor2D<float>&,
                                     const Tensor2D<float>&, Tensor2D<float>*, Tensor2D<float>&,
                                     Tensor2D<float>&);
template void conv1d_causal_backward(const Tensor2D<double>&, const ConvSpec&, const Tensor2D<double>&,
                                     const Tensor2D<double>&, Tensor2D<double>*, Tensor2D<double>&,
                                     Tensor2D<double>&);

}  // namespace detail

#define CHOREO_INSTANTIATE_OPS(T)                                                                  \
    template Tensor2D<T> conv1d_causal(const Tensor2D<T>&, const ConvSpec&, const Tensor2D<T>&,   \
                                       const Tensor2D<T>&);                                        \
    template Tensor2D<T> pointwise_affine(const Tensor2D<T>&, const Tensor2D<T>&,                  \
                                          const Tensor2D<T>&);                                     \
    template Tensor2D<T> activate(const Tensor2D<T>&, Activation);                                \
    template T activate(T, Activation);                                                            \
    template T l1_loss(const Tensor2D<T>&, const Tensor2D<T>&);

CHOREO_INSTANTIATE_OPS(float)
CHOREO_INSTANTIATE_OPS(double)

#undef CHOREO_INSTANTIATE_OPS

}  // namespace choreo
