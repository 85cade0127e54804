#include "choreo/tape.hpp"

#include "choreo/error.hpp"

#include <cmath>
#include <set>

namespace choreo {

namespace {

template <typename T>
void require_same_shape(const Tensor2D<T>& a, const Tensor2D<T>& b, const char* what) {
    if (a.channels() != b.channels() || a.frames() != b.frames()) {
        throw DimensionError(std::string(what) + ": shape mismatch");
    }
}

}  // namespace

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
    if (v.index >= nodes_.size()) throw InvalidArgument("tape: variable does not belong to this tape");
    return nodes_[v.index];
}

template <typename T>
const Tensor2D<T>& Tape<T>::value(Var v) const {
    const Node& n = node(v);
    return n.external != nullptr ? *n.external : n.owned;
}

template <typename T>
T Tape<T>::scalar(Var v) const {
    const auto& t = value(v);
    if (t.size() != 1) throw DimensionError("tape: node is not a scalar");
    return t(0, 0);
}

template <typename T>
typename Tape<T>::Var Tape<T>::push(Tensor2D<T> value, bool needs_grad,
                                    std::function<void(const Tensor2D<T>&, GradList&)> backward) {
    Node n;
    n.owned = std::move(value);
    n.needs_grad = track_ && needs_grad;
    if (n.needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

template <typename T>
Tensor2D<T>& Tape<T>::grad_slot(GradList& grads, Var v) const {
    auto& slot = grads[v.index];
    if (slot.empty()) {
        const auto& val = value(v);
        slot = Tensor2D<T>(val.channels(), val.frames());
    }
    return slot;
}

template <typename T>
typename Tape<T>::Var Tape<T>::constant(Tensor2D<T> value) {
    return push(std::move(value), false, nullptr);
}

template <typename T>
typename Tape<T>::Var Tape<T>::parameter(const std::string& name, const Tensor2D<T>& value) {
    for (const auto& n : nodes_) {
        if (n.external != nullptr && n.parameter_name == name) {
            throw InvalidArgument("tape: parameter '" + name + "' registered twice");
        }
    }
    Node n;
    n.external = &value;
    n.parameter_name = name;
    n.needs_grad = track_;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

template <typename T>
typename Tape<T>::Var Tape<T>::conv1d(Var input, Var weights, Var bias, const ConvSpec& spec) {
    auto out = conv1d_causal(value(input), spec, value(weights), value(bias));
    const bool ng = needs_grad(input) || needs_grad(weights) || needs_grad(bias);
    return push(std::move(out), ng, [this, input, weights, bias, spec](const Tensor2D<T>& g, GradList& grads) {
        const auto& w = value(weights);
        const auto& b = value(bias);
        Tensor2D<T> gw(w.channels(), w.frames());
        Tensor2D<T> gb(b.channels(), 1);
        Tensor2D<T>* gx = needs_grad(input) ? &grad_slot(grads, input) : nullptr;
        detail::conv1d_causal_backward(value(input), spec, w, g, gx, gw, gb);
        if (needs_grad(weights)) {
            auto& slot = grad_slot(grads, weights);
            for (std::size_t n = 0; n < gw.size(); ++n) slot.data()[n] += gw.data()[n];
        }
        if (needs_grad(bias)) {
            auto& slot = grad_slot(grads, bias);
            for (std::size_t n = 0; n < gb.size(); ++n) slot.data()[n] += gb.data()[n];
        }
    });
}

template <typename T>
typename Tape<T>::Var Tape<T>::affine(Var input, Var weights, Var bias) {
    const ConvSpec spec{value(input).channels(), value(weights).channels(), 1, 1};
    return conv1d(input, weights, bias, spec);
}

template <typename T>
typename Tape<T>::Var Tape<T>::activate(Var input, Activation kind) {
    auto out = choreo::activate(value(input), kind);
    const std::size_t self = nodes_.size();
    return push(std::move(out), needs_grad(input), [this, input, kind, self](const Tensor2D<T>& g, GradList& grads) {
        const auto x = value(input).data();
        const auto y = value(Var{self}).data();
        auto gx = grad_slot(grads, input).data();
        const auto gy = g.data();
        for (std::size_t n = 0; n < gy.size(); ++n) {
            switch (kind) {
                case Activation::Tanh:
                    gx[n] += gy[n] * (T{1} - y[n] * y[n]);
                    break;
                case Activation::Sigmoid:
                    gx[n] += gy[n] * y[n] * (T{1} - y[n]);
                    break;
                case Activation::Relu:
                    if (x[n] > T{0}) gx[n] += gy[n];
                    break;
            }
        }
    });
}

template <typename T>
typename Tape<T>::Var Tape<T>::add(Var a, Var b) {
    require_same_shape(value(a), value(b), "add");
    Tensor2D<T> out = value(a);
    const auto vb = value(b).data();
    for (std::size_t n = 0; n < vb.size(); ++n) out.data()[n] += vb[n];
    return push(std::move(out), needs_grad(a) || needs_grad(b), [this, a, b](const Tensor2D<T>& g, GradList& grads) {
        for (Var v : {a, b}) {
            if (!needs_grad(v)) continue;
            auto gv = grad_slot(grads, v).data();
            for (std::size_t n = 0; n < gv.size(); ++n) gv[n] += g.data()[n];
        }
    });
}

template <typename T>
typename Tape<T>::Var Tape<T>::multiply(Var a, Var b) {
    require_same_shape(value(a), value(b), "multiply");
    Tensor2D<T> out = value(a);
    const auto vb = value(b).data();
    for (std::size_t n = 0; n < vb.size(); ++n) out.data()[n] *= vb[n];
    return push(std::move(out), needs_grad(a) || needs_grad(b), [this, a, b](const Tensor2D<T>& g, GradList& grads) {
        const auto va = value(a).data();
        const auto vb = value(b).data();
        const auto gy = g.data();
        if (needs_grad(a)) {
            auto ga = grad_slot(grads, a).data();
            for (std::size_t n = 0; n < gy.size(); ++n) ga[n] += gy[n] * vb[n];
        }
        if (needs_grad(b)) {
            auto gb = grad_slot(grads, b).data();
            for (std::size_t n = 0; n < gy.size(); ++n) gb[n] += gy[n] * va[n];
        }
    });
}

template <typename T>
typename Tape<T>::Var Tape<T>::scale_shift(Var x, T scale, T shift) {
    Tensor2D<T> out = value(x);
    for (auto& v : out.data()) v = scale * v + shift;
    return push(std::move(out), needs_grad(x), [this, x, scale](const Tensor2D<T>& g, GradList& grads) {
        auto gx = grad_slot(grads, x).data();
        for (std::size_t n = 0; n < gx.size(); ++n) gx[n] += scale * g.data()[n];
    });
}

template <typename T>
typename Tape<T>::Var Tape<T>::slice_channels(Var x, std::size_t first, std::size_t count) {
    auto out = value(x).slice_channels(first, count);
    return push(std::move(out), needs_grad(x), [this, x, first, count](const Tensor2D<T>& g, GradList& grads) {
        auto& gx = grad_slot(grads, x);
        for (std::size_t c = 0; c < count; ++c) {
            auto dst = gx.row(first + c);
            const auto src = g.row(c);
            for (std::size_t t = 0; t < src.size(); ++t) dst[t] += src[t];
        }
    });
}

template <typename T>
typename Tape<T>::Var Tape<T>::slice_frames(Var x, std::size_t first, std::size_t count) {
    auto out = value(x).slice_frames(first, count);
    return push(std::move(out), needs_grad(x), [this, x, first, count](const Tensor2D<T>& g, GradList& grads) {
        auto& gx = grad_slot(grads, x);
        for (std::size_t c = 0; c < gx.channels(); ++c) {
            for (std::size_t t = 0; t < count; ++t) gx(c, first + t) += g(c, t);
        }
    });
}

template <typename T>
typename Tape<T>::Var Tape<T>::pair_distances(Var x, std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                              T scale) {
    const auto& in = value(x);
    if (pairs.empty()) throw InvalidArgument("pair_distances: no pairs");
    for (const auto& [a, b] : pairs) {
        if (2 * a + 1 >= in.channels() || 2 * b + 1 >= in.channels()) {
            throw DimensionError("pair_distances: point index out of range");
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges(pairs.begin(), pairs.end());
    Tensor2D<T> out(edges.size(), in.frames());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [a, b] = edges[e];
        for (std::size_t t = 0; t < in.frames(); ++t) {
            const T dx = in(2 * a, t) - in(2 * b, t);
            const T dy = in(2 * a + 1, t) - in(2 * b + 1, t);
            out(e, t) = scale * std::sqrt(dx * dx + dy * dy);
        }
    }
    return push(std::move(out), needs_grad(x), [this, x, edges, scale](const Tensor2D<T>& g, GradList& grads) {
        const auto& in = value(x);
        auto& gx = grad_slot(grads, x);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const auto [a, b] = edges[e];
            for (std::size_t t = 0; t < in.frames(); ++t) {
                const T dx = in(2 * a, t) - in(2 * b, t);
                const T dy = in(2 * a + 1, t) - in(2 * b + 1, t);
                const T len = std::sqrt(dx * dx + dy * dy);
                if (len == T{0}) continue;
                const T f = g(e, t) * scale / len;
                gx(2 * a, t) += f * dx;
                gx(2 * a + 1, t) += f * dy;
                gx(2 * b, t) -= f * dx;
                gx(2 * b + 1, t) -= f * dy;
            }
        }
    });
}

template <typename T>
typename Tape<T>::Var Tape<T>::l1_loss(Var pred, Var target) {
    const T loss = choreo::l1_loss(value(pred), value(target));
    Tensor2D<T> out(1, 1, loss);
    return push(std::move(out), needs_grad(pred) || needs_grad(target),
                [this, pred, target](const Tensor2D<T>& g, GradList& grads) {
                    const auto p = value(pred).data();
                    const auto q = value(target).data();
                    const T scale = g(0, 0) / static_cast<T>(p.size());
                    auto sign = [](T d) { return d > T{0} ? T{1} : (d < T{0} ? T{-1} : T{0}); };
                    if (needs_grad(pred)) {
                        auto gp = grad_slot(grads, pred).data();
                        for (std::size_t n = 0; n < p.size(); ++n) gp[n] += scale * sign(p[n] - q[n]);
                    }
                    if (needs_grad(target)) {
                        auto gq = grad_slot(grads, target).data();
                        for (std::size_t n = 0; n < p.size(); ++n) gq[n] -= scale * sign(p[n] - q[n]);
                    }
                });
}

template <typename T>
Gradients<T> Tape<T>::backward(Var loss) const {
    if (!track_) throw InvalidArgument("tape: gradients were not tracked");
    if (loss.index >= nodes_.size()) throw InvalidArgument("tape: loss is not a node of this tape");
    if (value(loss).size() != 1) throw DimensionError("tape: backward requires a scalar loss");

    GradList grads(nodes_.size());
    if (nodes_[loss.index].needs_grad) grads[loss.index] = Tensor2D<T>(1, 1, T{1});
    for (std::size_t n = loss.index + 1; n-- > 0;) {
        const Node& nd = nodes_[n];
        if (grads[n].empty() || !nd.backward) continue;
        nd.backward(grads[n], grads);
        if (n != loss.index) grads[n] = Tensor2D<T>();  // activations' grads no longer needed
    }

    Gradients<T> out;
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        const Node& nd = nodes_[n];
        if (nd.external == nullptr) continue;
        if (grads[n].empty()) {
            out.emplace(nd.parameter_name, Tensor2D<T>(nd.external->channels(), nd.external->frames()));
        } else {
            out.emplace(nd.parameter_name, std::move(grads[n]));
        }
    }
    return out;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace choreo
