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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mfm/namespace.hpp"

MFM_NAMESPACE_BEGIN

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of `real` with value semantics.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, real fill = real(0));
    Tensor(Shape shape, std::vector<real> values);

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] int rank() const noexcept { return static_cast<int>(shape_.size()); }
    [[nodiscard]] std::int64_t dim(int axis) const;
    [[nodiscard]] std::int64_t numel() const noexcept { return static_cast<std::int64_t>(data_.size()); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] real* data() noexcept { return data_.data(); }
    [[nodiscard]] const real* data() const noexcept { return data_.data(); }
    [[nodiscard]] std::span<real> values() noexcept { return data_; }
    [[nodiscard]] std::span<const real> values() const noexcept { return data_; }

    real& operator[](std::int64_t i) noexcept { return data_[static_cast<std::size_t>(i)]; }
    real operator[](std::int64_t i) const noexcept { return data_[static_cast<std::size_t>(i)]; }

    /// Bounds-checked multi-index access.
    real& at(std::initializer_list<std::int64_t> index);
    [[nodiscard]] real at(std::initializer_list<std::int64_t> index) const;

    /// Same storage, new shape with identical element count.
    [[nodiscard]] Tensor reshaped(Shape shape) const;

    void fill(real value);
    /// Elementwise `this += other`; shapes must match.
    void add_(const Tensor& other);

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    [[nodiscard]] std::int64_t offset(std::initializer_list<std::int64_t> index) const;

    Shape shape_;
    std::vector<real> data_;
};

/// Throws ShapeError unless `t` has exactly `expected` shape.
void require_shape(const Tensor& t, const Shape& expected, const char* what);
/// Throws ShapeError unless `t` has the given rank.
void require_rank(const Tensor& t, int rank, const char* what);

/// Largest absolute elementwise difference; shapes must match.
real max_abs_diff(const Tensor& a, const Tensor& b);

MFM_NAMESPACE_END
