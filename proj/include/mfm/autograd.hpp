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

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mfm/kernels.hpp"
#include "mfm/tensor.hpp"

MFM_NAMESPACE_BEGIN

namespace detail {
struct Node;
}

/// Handle to a node of a reverse-mode autodiff graph. Copies share the node.
///
/// An op output keeps its inputs alive through its backward closure; inputs never
/// reference outputs, so a graph is released with its last handle.
class Var {
public:
    /// Receives the gradient flowing into this node and the node's forward value.
    using Backward = std::function<void(const Tensor& grad, const Tensor& value)>;

    Var() = default;
    explicit Var(Tensor value, bool requires_grad = false);

    /// Op output. The backward closure is dropped when no parent requires grad.
    static Var make(Tensor value, std::vector<Var> parents, Backward backward);

    [[nodiscard]] bool defined() const noexcept { return node_ != nullptr; }
    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] Tensor& mutable_value();
    [[nodiscard]] const Shape& shape() const { return value().shape(); }
    [[nodiscard]] bool requires_grad() const;

    [[nodiscard]] bool has_grad() const;
    /// Accumulated gradient; zeros of the value's shape if none has arrived.
    [[nodiscard]] Tensor grad() const;
    /// Gradient accumulator, allocated as zeros on first use.
    Tensor& grad_buffer() const;
    void zero_grad();

    /// Scalar value of a one-element node.
    [[nodiscard]] real item() const;

    /// Reverse sweep from this node; the value must hold exactly one element.
    void backward();

    [[nodiscard]] const void* id() const noexcept { return node_.get(); }

private:
    std::shared_ptr<detail::Node> node_;
};

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, real factor);
/// Elementwise sum of equally shaped nodes.
Var add_all(std::span<const Var> terms);
Var leaky_relu(const Var& x, real slope);
/// Sum of all elements -> shape [1].
Var sum_all(const Var& x);
Var reshape(const Var& x, Shape shape);
/// Concatenation along axis 1 of [B, C_i, ...] tensors with equal trailing dims.
Var concat_channels(std::span<const Var> parts);
/// Channels [begin, end) along axis 1.
Var slice_channels(const Var& x, std::int64_t begin, std::int64_t end);

Var conv(const Var& x, const Var& weight, const Var& bias, const kernels::ConvGeometry& geometry);
Var upsample2x(const Var& x, const std::array<std::int64_t, 3>& size);
Var softmax(const Var& x);
Var log_softmax(const Var& x);

MFM_NAMESPACE_END
