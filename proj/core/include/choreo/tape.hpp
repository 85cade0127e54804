#pragma once

#include "choreo/ops.hpp"
#include "choreo/tensor.hpp"

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace choreo {

template <typename T>
using Gradients = NamedTensors<T>;

/// Records a computation built from the ops in ops.hpp and evaluates
/// reverse-mode gradients of a scalar result with respect to every
/// registered parameter.
///
/// Parameters are referenced, not copied: a tensor passed to parameter()
/// must outlive the tape. A tape created with track_gradients = false only
/// evaluates values and refuses backward().
template <typename T>
class Tape {
public:
    struct Var {
        std::size_t index = 0;
    };

    explicit Tape(bool track_gradients = true) : track_(track_gradients) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor2D<T> value);
    Var parameter(const std::string& name, const Tensor2D<T>& value);

    Var conv1d(Var input, Var weights, Var bias, const ConvSpec& spec);
    Var affine(Var input, Var weights, Var bias);
    Var activate(Var input, Activation kind);
    Var add(Var a, Var b);
    Var multiply(Var a, Var b);
    /// scale * x + shift, elementwise.
    Var scale_shift(Var x, T scale, T shift);
    Var slice_channels(Var x, std::size_t first, std::size_t count);
    Var slice_frames(Var x, std::size_t first, std::size_t count);
    /// Row e of the result is scale * |p_a - p_b| per frame, where point j
    /// occupies channels (2j, 2j + 1). The gradient at zero length is 0.
    Var pair_distances(Var x, std::span<const std::pair<std::size_t, std::size_t>> pairs, T scale);
    /// 1x1 mean absolute difference; subgradient 0 at ties.
    Var l1_loss(Var pred, Var target);

    const Tensor2D<T>& value(Var v) const;
    T scalar(Var v) const;
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Gradients of the 1x1 node `loss` for every registered parameter.
    /// Parameters the loss does not reach receive zeros.
    Gradients<T> backward(Var loss) const;

private:
    using GradList = std::vector<Tensor2D<T>>;

    struct Node {
        Tensor2D<T> owned;
        const Tensor2D<T>* external = nullptr;
        std::string parameter_name;
        bool needs_grad = false;
        std::function<void(const Tensor2D<T>& grad, GradList& grads)> backward;
    };

    const Node& node(Var v) const;
    bool needs_grad(Var v) const { return track_ && node(v).needs_grad; }
    Var push(Tensor2D<T> value, bool needs_grad,
             std::function<void(const Tensor2D<T>&, GradList&)> backward);
    Tensor2D<T>& grad_slot(GradList& grads, Var v) const;

    bool track_;
    std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace choreo
