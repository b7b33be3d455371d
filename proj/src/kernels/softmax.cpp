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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mfm/errors.hpp"
#include "mfm/kernels.hpp"

MFM_NAMESPACE_BEGIN
namespace kernels {
namespace {

constexpr std::int64_t kChunk = 256;

struct AxisLayout {
    std::int64_t batch, levels, inner;
};

AxisLayout layout(const Tensor& x, const char* what) {
    if (x.rank() < 2) throw ShapeError(std::string(what) + ": expected rank >= 2, got " + shape_str(x.shape()));
    const std::int64_t batch = x.dim(0), levels = x.dim(1);
    return {batch, levels, levels == 0 || batch == 0 ? 0 : x.numel() / (batch * levels)};
}

// Calls fn(base_offset, len) for each pixel chunk, in parallel.
template <class Fn>
void for_each_chunk(const AxisLayout& l, Fn&& fn) {
    const std::int64_t chunks = (l.inner + kChunk - 1) / kChunk;
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < l.batch; ++b)
        for (std::int64_t c = 0; c < chunks; ++c) {
            const std::int64_t p0 = c * kChunk;
            fn(b * l.levels * l.inner + p0, std::min(kChunk, l.inner - p0));
        }
}

void softmax_core(const Tensor& x, Tensor& out, bool log_space) {
    const AxisLayout l = layout(x, "softmax");
    for_each_chunk(l, [&](std::int64_t base, std::int64_t len) {
        real mx[kChunk];
        real sum[kChunk];
        std::fill_n(mx, len, -std::numeric_limits<real>::infinity());
        std::fill_n(sum, len, real(0));
        for (std::int64_t d = 0; d < l.levels; ++d) {
            const real* src = x.data() + base + d * l.inner;
            for (std::int64_t p = 0; p < len; ++p) mx[p] = std::max(mx[p], src[p]);
        }
        for (std::int64_t d = 0; d < l.levels; ++d) {
            const real* src = x.data() + base + d * l.inner;
            real* dst = out.data() + base + d * l.inner;
            for (std::int64_t p = 0; p < len; ++p) {
                dst[p] = std::exp(src[p] - mx[p]);
                sum[p] += dst[p];
            }
        }
        for (std::int64_t d = 0; d < l.levels; ++d) {
            const real* src = x.data() + base + d * l.inner;
            real* dst = out.data() + base + d * l.inner;
            if (log_space) {
                for (std::int64_t p = 0; p < len; ++p) dst[p] = src[p] - mx[p] - std::log(sum[p]);
            } else {
                for (std::int64_t p = 0; p < len; ++p) dst[p] /= sum[p];
            }
        }
    });
}

}  // namespace

Tensor softmax_forward(const Tensor& x) {
    Tensor out(x.shape());
    softmax_core(x, out, false);
    return out;
}

void softmax_backward(const Tensor& y, const Tensor& grad_y, Tensor& grad_x) {
    const AxisLayout l = layout(y, "softmax_backward");
    for_each_chunk(l, [&](std::int64_t base, std::int64_t len) {
        real dot[kChunk];
        std::fill_n(dot, len, real(0));
        for (std::int64_t d = 0; d < l.levels; ++d) {
            const real* yy = y.data() + base + d * l.inner;
            const real* gy = grad_y.data() + base + d * l.inner;
            for (std::int64_t p = 0; p < len; ++p) dot[p] += yy[p] * gy[p];
        }
        for (std::int64_t d = 0; d < l.levels; ++d) {
            const real* yy = y.data() + base + d * l.inner;
            const real* gy = grad_y.data() + base + d * l.inner;
            real* gx = grad_x.data() + base + d * l.inner;
            for (std::int64_t p = 0; p < len; ++p) gx[p] += yy[p] * (gy[p] - dot[p]);
        }
    });
}

Tensor log_softmax_forward(const Tensor& x) {
    Tensor out(x.shape());
    softmax_core(x, out, true);
    return out;
}

void log_softmax_backward(const Tensor& y, const Tensor& grad_y, Tensor& grad_x) {
    const AxisLayout l = layout(y, "log_softmax_backward");
    for_each_chunk(l, [&](std::int64_t base, std::int64_t len) {
        real total[kChunk];
        std::fill_n(total, len, real(0));
        for (std::int64_t d = 0; d < l.levels; ++d) {
            const real* gy = grad_y.data() + base + d * l.inner;
            for (std::int64_t p = 0; p < len; ++p) total[p] += gy[p];
        }
        for (std::int64_t d = 0; d < l.levels; ++d) {
            const real* yy = y.data() + base + d * l.inner;
            const real* gy = grad_y.data() + base + d * l.inner;
            real* gx = grad_x.data() + base + d * l.inner;
            for (std::int64_t p = 0; p < len; ++p) gx[p] += gy[p] - std::exp(yy[p]) * total[p];
        }
    });
}

Tensor soft_argmax_forward(const Tensor& p) {
    require_rank(p, 4, "soft_argmax input");
    const std::int64_t batch = p.dim(0), levels = p.dim(1), plane = p.dim(2) * p.dim(3);
    Tensor out({batch, p.dim(2), p.dim(3)});
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < batch; ++b) {
        real* dst = out.data() + b * plane;
        for (std::int64_t d = 0; d < levels; ++d) {
            const real* src = p.data() + (b * levels + d) * plane;
            const auto dv = static_cast<real>(d);
            for (std::int64_t q = 0; q < plane; ++q) dst[q] += dv * src[q];
        }
    }
    return out;
}

void soft_argmax_backward(const Tensor& grad_out, Tensor& grad_p) {
    const std::int64_t batch = grad_p.dim(0), levels = grad_p.dim(1), plane = grad_p.dim(2) * grad_p.dim(3);
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t d = 0; d < levels; ++d) {
            const real* g = grad_out.data() + b * plane;
            real* dst = grad_p.data() + (b * levels + d) * plane;
            const auto dv = static_cast<real>(d);
            for (std::int64_t q = 0; q < plane; ++q) dst[q] += dv * g[q];
        }
}

}  // namespace kernels
MFM_NAMESPACE_END
