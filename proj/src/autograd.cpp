// Copyright 2026 The MFM Stereo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mfm/autograd.hpp"

#include <algorithm>
#include <unordered_set>
#include <utility>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

namespace detail {

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<Var> parents;
    Var::Backward backward;
};

}  // namespace detail

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
}

Var Var::make(Tensor value, std::vector<Var> parents, Backward backward) {
    Var out(std::move(value), false);
    const bool any = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p.requires_grad(); });
    if (any) {
        out.node_->requires_grad = true;
        out.node_->parents = std::move(parents);
        out.node_->backward = std::move(backward);
    }
    return out;
}

const Tensor& Var::value() const {
    if (!node_) throw StateError("access to an undefined Var");
    return node_->value;
}

Tensor& Var::mutable_value() {
    if (!node_) throw StateError("access to an undefined Var");
    return node_->value;
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }

bool Var::has_grad() const { return node_ && !node_->grad.empty(); }

Tensor Var::grad() const {
    if (has_grad()) return node_->grad;
    return Tensor(value().shape());
}

Tensor& Var::grad_buffer() const {
    if (!node_) throw StateError("access to an undefined Var");
    if (node_->grad.shape() != node_->value.shape() || node_->grad.empty()) node_->grad = Tensor(node_->value.shape());
    return node_->grad;
}

void Var::zero_grad() {
    if (node_ && !node_->grad.empty()) node_->grad.fill(real(0));
}

real Var::item() const {
    if (value().numel() != 1) throw ShapeError("item() on non-scalar of shape " + shape_str(value().shape()));
    return value()[0];
}

void Var::backward() {
    if (value().numel() != 1) throw ShapeError("backward() needs a scalar, got " + shape_str(value().shape()));
    if (!requires_grad()) return;

    // Iterative post-order DFS; reverse order is a valid topological order.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* parent = node->parents[next++].node_.get();
            if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    grad_buffer().fill(real(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* node = *it;
        if (node->backward && !node->grad.empty()) node->backward(node->grad, node->value);
    }
}

namespace {

void require_same_shape(const Var& a, const Var& b, const char* what) { require_shape(b.value(), a.shape(), what); }

}  // namespace

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    out.add_(b.value());
    return Var::make(std::move(out), {a, b}, [a, b](const Tensor& g, const Tensor&) mutable {
        if (a.requires_grad()) a.grad_buffer().add_(g);
        if (b.requires_grad()) b.grad_buffer().add_(g);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] -= b.value()[i];
    return Var::make(std::move(out), {a, b}, [a, b](const Tensor& g, const Tensor&) mutable {
        if (a.requires_grad()) a.grad_buffer().add_(g);
        if (b.requires_grad()) {
            Tensor& gb = b.grad_buffer();
            for (std::int64_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
        }
    });
}

Var scale(const Var& a, real factor) {
    Tensor out = a.value();
    for (auto& v : out.values()) v *= factor;
    return Var::make(std::move(out), {a}, [a, factor](const Tensor& g, const Tensor&) mutable {
        Tensor& ga = a.grad_buffer();
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] += factor * g[i];
    });
}

Var add_all(std::span<const Var> terms) {
    if (terms.empty()) throw ArityError("add_all: no terms");
    Tensor out = terms.front().value();
    for (std::size_t i = 1; i < terms.size(); ++i) {
        require_same_shape(terms.front(), terms[i], "add_all");
        out.add_(terms[i].value());
    }
    std::vector<Var> parents(terms.begin(), terms.end());
    return Var::make(std::move(out), parents, [parents](const Tensor& g, const Tensor&) mutable {
        for (auto& p : parents)
            if (p.requires_grad()) p.grad_buffer().add_(g);
    });
}

Var leaky_relu(const Var& x, real slope) {
    Tensor out = x.value();
    for (auto& v : out.values()) v = v > 0 ? v : slope * v;
    return Var::make(std::move(out), {x}, [x, slope](const Tensor& g, const Tensor&) mutable {
        Tensor& gx = x.grad_buffer();
        const Tensor& in = x.value();
        for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] += in[i] > 0 ? g[i] : slope * g[i];
    });
}

Var sum_all(const Var& x) {
    // Pairwise reduction in double, fixed order.
    std::vector<double> level(x.value().values().begin(), x.value().values().end());
    while (level.size() > 1) {
        std::vector<double> next((level.size() + 1) / 2);
        for (std::size_t i = 0; i < next.size(); ++i)
            next[i] = level[2 * i] + (2 * i + 1 < level.size() ? level[2 * i + 1] : 0.0);
        level.swap(next);
    }
    Tensor out({1}, level.empty() ? real(0) : static_cast<real>(level[0]));
    return Var::make(std::move(out), {x}, [x](const Tensor& g, const Tensor&) mutable {
        Tensor& gx = x.grad_buffer();
        const real gv = g[0];
        for (auto& v : gx.values()) v += gv;
    });
}

Var reshape(const Var& x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    return Var::make(std::move(out), {x}, [x](const Tensor& g, const Tensor&) mutable {
        Tensor& gx = x.grad_buffer();
        for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] += g[i];
    });
}

Var concat_channels(std::span<const Var> parts) {
    if (parts.empty()) throw ArityError("concat_channels: no inputs");
    const Shape& ref = parts.front().shape();
    if (ref.size() < 2) throw ShapeError("concat_channels: rank must be >= 2");
    std::int64_t channels = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != ref.size() || s[0] != ref[0] || !std::equal(s.begin() + 2, s.end(), ref.begin() + 2))
            throw ShapeError("concat_channels: incompatible shapes " + shape_str(ref) + " and " + shape_str(s));
        channels += s[1];
    }
    Shape out_shape = ref;
    out_shape[1] = channels;
    const std::int64_t batch = ref[0];
    const std::int64_t inner = shape_numel(Shape(ref.begin() + 2, ref.end()));
    Tensor out(out_shape);
    std::int64_t offset = 0;
    for (const auto& p : parts) {
        const std::int64_t c = p.shape()[1];
        for (std::int64_t b = 0; b < batch; ++b)
            std::copy_n(p.value().data() + b * c * inner, c * inner, out.data() + (b * channels + offset) * inner);
        offset += c;
    }
    std::vector<Var> parents(parts.begin(), parts.end());
    return Var::make(std::move(out), parents, [parents, batch, channels, inner](const Tensor& g, const Tensor&) mutable {
        std::int64_t off = 0;
        for (auto& p : parents) {
            const std::int64_t c = p.shape()[1];
            if (p.requires_grad()) {
                Tensor& gp = p.grad_buffer();
                for (std::int64_t b = 0; b < batch; ++b) {
                    const real* src = g.data() + (b * channels + off) * inner;
                    real* dst = gp.data() + b * c * inner;
                    for (std::int64_t i = 0; i < c * inner; ++i) dst[i] += src[i];
                }
            }
            off += c;
        }
    });
}

Var slice_channels(const Var& x, std::int64_t begin, std::int64_t end) {
    const Shape& s = x.shape();
    if (s.size() < 2 || begin < 0 || end > s[1] || begin >= end)
        throw ShapeError("slice_channels: invalid range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") for shape " + shape_str(s));
    const std::int64_t batch = s[0], channels = s[1];
    const std::int64_t inner = shape_numel(Shape(s.begin() + 2, s.end()));
    Shape out_shape = s;
    out_shape[1] = end - begin;
    Tensor out(out_shape);
    for (std::int64_t b = 0; b < batch; ++b)
        std::copy_n(x.value().data() + (b * channels + begin) * inner, (end - begin) * inner,
                    out.data() + b * (end - begin) * inner);
    return Var::make(std::move(out), {x}, [x, batch, channels, inner, begin, end](const Tensor& g, const Tensor&) mutable {
        Tensor& gx = x.grad_buffer();
        for (std::int64_t b = 0; b < batch; ++b) {
            const real* src = g.data() + b * (end - begin) * inner;
            real* dst = gx.data() + (b * channels + begin) * inner;
            for (std::int64_t i = 0; i < (end - begin) * inner; ++i) dst[i] += src[i];
        }
    });
}

Var conv(const Var& x, const Var& weight, const Var& bias, const kernels::ConvGeometry& geometry) {
    Tensor out = kernels::conv_forward(x.value(), weight.value(), bias.defined() ? &bias.value() : nullptr, geometry);
    std::vector<Var> parents{x, weight};
    if (bias.defined()) parents.push_back(bias);
    return Var::make(std::move(out), parents, [x, weight, bias, geometry](const Tensor& g, const Tensor&) mutable {
        Tensor* gx = x.requires_grad() ? &x.grad_buffer() : nullptr;
        Tensor* gw = weight.requires_grad() ? &weight.grad_buffer() : nullptr;
        Tensor* gb = bias.defined() && bias.requires_grad() ? &bias.grad_buffer() : nullptr;
        kernels::conv_backward(x.value(), weight.value(), g, geometry, gx, gw, gb);
    });
}

Var upsample2x(const Var& x, const std::array<std::int64_t, 3>& size) {
    Tensor out = kernels::upsample2x_forward(x.value(), size);
    return Var::make(std::move(out), {x}, [x](const Tensor& g, const Tensor&) mutable {
        kernels::upsample2x_backward(g, x.grad_buffer());
    });
}

Var softmax(const Var& x) {
    Tensor out = kernels::softmax_forward(x.value());
    return Var::make(std::move(out), {x}, [x](const Tensor& g, const Tensor& y) mutable {
        kernels::softmax_backward(y, g, x.grad_buffer());
    });
}

Var log_softmax(const Var& x) {
    Tensor out = kernels::log_softmax_forward(x.value());
    return Var::make(std::move(out), {x}, [x](const Tensor& g, const Tensor& y) mutable {
        kernels::log_softmax_backward(y, g, x.grad_buffer());
    });
}

MFM_NAMESPACE_END
