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

#include "mfm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) {
        if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, real fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_numel(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<real> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size()))
        throw ShapeError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
}

std::int64_t Tensor::dim(int axis) const {
    if (axis < 0) axis += rank();
    if (axis < 0 || axis >= rank()) throw ShapeError("axis out of range for shape " + shape_str(shape_));
    return shape_[static_cast<std::size_t>(axis)];
}

std::int64_t Tensor::offset(std::initializer_list<std::int64_t> index) const {
    if (static_cast<int>(index.size()) != rank())
        throw ShapeError("index rank mismatch for shape " + shape_str(shape_));
    std::int64_t off = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i < 0 || i >= shape_[axis]) throw ShapeError("index out of range for shape " + shape_str(shape_));
        off = off * shape_[axis] + i;
        ++axis;
    }
    return off;
}

real& Tensor::at(std::initializer_list<std::int64_t> index) { return data_[static_cast<std::size_t>(offset(index))]; }

real Tensor::at(std::initializer_list<std::int64_t> index) const {
    return data_[static_cast<std::size_t>(offset(index))];
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != numel())
        throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(real value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::add_(const Tensor& other) {
    if (other.shape_ != shape_)
        throw ShapeError("add_: shape " + shape_str(other.shape_) + " vs " + shape_str(shape_));
    real* dst = data_.data();
    const real* src = other.data_.data();
    const std::int64_t n = numel();
#pragma omp simd
    for (std::int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
    if (t.shape() != expected)
        throw ShapeError(std::string(what) + ": expected shape " + shape_str(expected) + ", got " +
                         shape_str(t.shape()));
}

void require_rank(const Tensor& t, int rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_str(t.shape()));
}

real max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError("max_abs_diff: shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    real m = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

MFM_NAMESPACE_END
