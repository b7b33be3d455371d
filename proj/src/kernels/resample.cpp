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
#include <string>
#include <vector>

#include "mfm/errors.hpp"
#include "mfm/kernels.hpp"

MFM_NAMESPACE_BEGIN
namespace kernels {
namespace {

struct AxisMap {
    std::vector<std::int64_t> lo, hi;
    std::vector<real> t;
};

// Corner-aligned sample positions; exact integer arithmetic for the lattice.
AxisMap corner_aligned(std::int64_t in, std::int64_t out) {
    AxisMap m;
    m.lo.resize(static_cast<std::size_t>(out));
    m.hi.resize(static_cast<std::size_t>(out));
    m.t.resize(static_cast<std::size_t>(out));
    for (std::int64_t o = 0; o < out; ++o) {
        std::int64_t lo = 0;
        real t = 0;
        if (out > 1 && in > 1) {
            const std::int64_t num = o * (in - 1);
            lo = num / (out - 1);
            t = static_cast<real>(num % (out - 1)) / static_cast<real>(out - 1);
        }
        const auto i = static_cast<std::size_t>(o);
        m.lo[i] = lo;
        m.hi[i] = std::min(lo + 1, in - 1);
        m.t[i] = t;
    }
    return m;
}

}  // namespace

Tensor bilinear_forward(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
    require_rank(x, 4, "bilinear input");
    if (out_h <= 0 || out_w <= 0) throw ShapeError("bilinear: output size must be positive");
    const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const AxisMap ym = corner_aligned(h, out_h);
    const AxisMap xm = corner_aligned(w, out_w);
    Tensor out({x.dim(0), x.dim(1), out_h, out_w});
#pragma omp parallel for schedule(static)
    for (std::int64_t pl = 0; pl < planes; ++pl) {
        const real* src = x.data() + pl * h * w;
        real* dst = out.data() + pl * out_h * out_w;
        for (std::int64_t oy = 0; oy < out_h; ++oy) {
            const auto yi = static_cast<std::size_t>(oy);
            const real* r0 = src + ym.lo[yi] * w;
            const real* r1 = src + ym.hi[yi] * w;
            const real ty = ym.t[yi];
            real* drow = dst + oy * out_w;
            for (std::int64_t ox = 0; ox < out_w; ++ox) {
                const auto xi = static_cast<std::size_t>(ox);
                const real tx = xm.t[xi];
                const real top = (real(1) - tx) * r0[xm.lo[xi]] + tx * r0[xm.hi[xi]];
                const real bot = (real(1) - tx) * r1[xm.lo[xi]] + tx * r1[xm.hi[xi]];
                drow[ox] = (real(1) - ty) * top + ty * bot;
            }
        }
    }
    return out;
}

void bilinear_backward(const Tensor& grad_out, Tensor& grad_x) {
    require_rank(grad_out, 4, "bilinear grad_out");
    require_rank(grad_x, 4, "bilinear grad_x");
    const std::int64_t planes = grad_x.dim(0) * grad_x.dim(1), h = grad_x.dim(2), w = grad_x.dim(3);
    const std::int64_t out_h = grad_out.dim(2), out_w = grad_out.dim(3);
    const AxisMap ym = corner_aligned(h, out_h);
    const AxisMap xm = corner_aligned(w, out_w);
#pragma omp parallel for schedule(static)
    for (std::int64_t pl = 0; pl < planes; ++pl) {
        const real* src = grad_out.data() + pl * out_h * out_w;
        real* dst = grad_x.data() + pl * h * w;
        for (std::int64_t oy = 0; oy < out_h; ++oy) {
            const auto yi = static_cast<std::size_t>(oy);
            real* r0 = dst + ym.lo[yi] * w;
            real* r1 = dst + ym.hi[yi] * w;
            const real ty = ym.t[yi];
            const real* grow = src + oy * out_w;
            for (std::int64_t ox = 0; ox < out_w; ++ox) {
                const auto xi = static_cast<std::size_t>(ox);
                const real tx = xm.t[xi];
                const real g = grow[ox];
                r0[xm.lo[xi]] += (real(1) - ty) * (real(1) - tx) * g;
                r0[xm.hi[xi]] += (real(1) - ty) * tx * g;
                r1[xm.lo[xi]] += ty * (real(1) - tx) * g;
                r1[xm.hi[xi]] += ty * tx * g;
            }
        }
    }
}

Tensor interleave_forward(const std::vector<const Tensor*>& stages) {
    if (stages.empty()) throw ArityError("interleave: no stage volumes");
    const Tensor& first = *stages.front();
    require_rank(first, 4, "interleave stage");
    for (const Tensor* s : stages) require_shape(*s, first.shape(), "interleave stage");
    const auto n = static_cast<std::int64_t>(stages.size());
    const std::int64_t batch = first.dim(0), k = first.dim(1), plane = first.dim(2) * first.dim(3);
    Tensor out({batch, n * k, first.dim(2), first.dim(3)});
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t d = 0; d < n * k; ++d) {
            const Tensor& src = *stages[static_cast<std::size_t>(d % n)];
            std::copy_n(src.data() + (b * k + d / n) * plane, plane, out.data() + (b * n * k + d) * plane);
        }
    return out;
}

std::vector<Tensor> deinterleave(const Tensor& full, int n) {
    require_rank(full, 4, "deinterleave input");
    if (n <= 0 || full.dim(1) % n != 0)
        throw ArityError("deinterleave: " + std::to_string(full.dim(1)) + " levels are not divisible by " +
                         std::to_string(n));
    const std::int64_t batch = full.dim(0), levels = full.dim(1), k = levels / n;
    const std::int64_t plane = full.dim(2) * full.dim(3);
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.emplace_back(Shape{batch, k, full.dim(2), full.dim(3)});
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t d = 0; d < levels; ++d)
            std::copy_n(full.data() + (b * levels + d) * plane, plane,
                        out[static_cast<std::size_t>(d % n)].data() + (b * k + d / n) * plane);
    return out;
}

Tensor disparity_lerp_forward(const Tensor& x, int n, int d_max) {
    require_rank(x, 4, "disparity_lerp input");
    if (n <= 0 || d_max <= 0) throw ShapeError("disparity_lerp: n and d_max must be positive");
    const std::int64_t batch = x.dim(0), k = x.dim(1), plane = x.dim(2) * x.dim(3);
    Tensor out({batch, d_max, x.dim(2), x.dim(3)});
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t d = 0; d < d_max; ++d) {
            std::int64_t lo = d / n;
            real t = static_cast<real>(d % n) / static_cast<real>(n);
            if (lo >= k - 1) {
                lo = k - 1;
                t = 0;
            }
            const std::int64_t hi = std::min(lo + 1, k - 1);
            const real* a = x.data() + (b * k + lo) * plane;
            const real* c = x.data() + (b * k + hi) * plane;
            real* dst = out.data() + (b * d_max + d) * plane;
            for (std::int64_t p = 0; p < plane; ++p) dst[p] = (real(1) - t) * a[p] + t * c[p];
        }
    return out;
}

void disparity_lerp_backward(const Tensor& grad_out, int n, Tensor& grad_x) {
    const std::int64_t batch = grad_x.dim(0), k = grad_x.dim(1), plane = grad_x.dim(2) * grad_x.dim(3);
    const std::int64_t d_max = grad_out.dim(1);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t d = 0; d < d_max; ++d) {
            std::int64_t lo = d / n;
            real t = static_cast<real>(d % n) / static_cast<real>(n);
            if (lo >= k - 1) {
                lo = k - 1;
                t = 0;
            }
            const std::int64_t hi = std::min(lo + 1, k - 1);
            const real* g = grad_out.data() + (b * d_max + d) * plane;
            real* a = grad_x.data() + (b * k + lo) * plane;
            real* c = grad_x.data() + (b * k + hi) * plane;
            for (std::int64_t p = 0; p < plane; ++p) {
                a[p] += (real(1) - t) * g[p];
                c[p] += t * g[p];
            }
        }
}

}  // namespace kernels
MFM_NAMESPACE_END
