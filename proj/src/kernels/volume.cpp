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

#include "mfm/errors.hpp"
#include "mfm/kernels.hpp"

MFM_NAMESPACE_BEGIN
namespace kernels {
namespace {

void require_pair(const Tensor& a, const Tensor& b, const char* what) {
    require_rank(a, 4, what);
    require_shape(b, a.shape(), what);
}

}  // namespace

Tensor upsample2x_forward(const Tensor& x, const std::array<std::int64_t, 3>& size) {
    require_rank(x, 5, "upsample2x input");
    for (int a = 0; a < 3; ++a) {
        if ((size[a] + 1) / 2 != x.dim(2 + a))
            throw ShapeError("upsample2x: cannot map extent " + std::to_string(x.dim(2 + a)) + " to " +
                             std::to_string(size[a]));
    }
    const std::int64_t planes = x.dim(0) * x.dim(1);
    const std::int64_t id = x.dim(2), ih = x.dim(3), iw = x.dim(4);
    const auto [od, oh, ow] = size;
    Tensor out({x.dim(0), x.dim(1), od, oh, ow});
#pragma omp parallel for schedule(static)
    for (std::int64_t pl = 0; pl < planes; ++pl) {
        const real* src = x.data() + pl * id * ih * iw;
        real* dst = out.data() + pl * od * oh * ow;
        for (std::int64_t z = 0; z < od; ++z)
            for (std::int64_t y = 0; y < oh; ++y) {
                const real* srow = src + ((z / 2) * ih + y / 2) * iw;
                real* drow = dst + (z * oh + y) * ow;
                for (std::int64_t c = 0; c < ow; ++c) drow[c] = srow[c / 2];
            }
    }
    return out;
}

void upsample2x_backward(const Tensor& grad_out, Tensor& grad_x) {
    require_rank(grad_out, 5, "upsample2x grad");
    require_rank(grad_x, 5, "upsample2x grad_x");
    const std::int64_t planes = grad_x.dim(0) * grad_x.dim(1);
    const std::int64_t id = grad_x.dim(2), ih = grad_x.dim(3), iw = grad_x.dim(4);
    const std::int64_t od = grad_out.dim(2), oh = grad_out.dim(3), ow = grad_out.dim(4);
#pragma omp parallel for schedule(static)
    for (std::int64_t pl = 0; pl < planes; ++pl) {
        const real* src = grad_out.data() + pl * od * oh * ow;
        real* dst = grad_x.data() + pl * id * ih * iw;
        for (std::int64_t z = 0; z < od; ++z)
            for (std::int64_t y = 0; y < oh; ++y) {
                const real* srow = src + (z * oh + y) * ow;
                real* drow = dst + ((z / 2) * ih + y / 2) * iw;
                for (std::int64_t c = 0; c < ow; ++c) drow[c / 2] += srow[c];
            }
    }
}

Tensor gwc_forward(const Tensor& fl, const Tensor& fr, int groups, int k) {
    require_pair(fl, fr, "gwc features");
    const std::int64_t batch = fl.dim(0), ch = fl.dim(1), h = fl.dim(2), w = fl.dim(3);
    if (groups <= 0 || ch % groups != 0)
        throw ShapeError("gwc: " + std::to_string(groups) + " groups do not divide " + std::to_string(ch) +
                         " channels");
    if (k <= 0) throw ShapeError("gwc: k must be positive");
    const std::int64_t per_group = ch / groups;
    const real inv = real(1) / static_cast<real>(per_group);
    const std::int64_t plane = h * w;
    Tensor out({batch, groups, k, h, w});
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < batch; ++b) {
        for (std::int64_t g = 0; g < groups; ++g) {
            for (std::int64_t j = 0; j < k; ++j) {
                real* dst = out.data() + (((b * groups + g) * k + j) * plane);
                for (std::int64_t c = g * per_group; c < (g + 1) * per_group; ++c) {
                    const real* l = fl.data() + (b * ch + c) * plane;
                    const real* r = fr.data() + (b * ch + c) * plane;
                    for (std::int64_t y = 0; y < h; ++y) {
                        real* drow = dst + y * w;
                        const real* lrow = l + y * w;
                        const real* rrow = r + y * w;
#pragma omp simd
                        for (std::int64_t x = j; x < w; ++x) drow[x] += lrow[x] * rrow[x - j];
                    }
                }
                for (std::int64_t p = 0; p < plane; ++p) dst[p] *= inv;
            }
        }
    }
    return out;
}

void gwc_backward(const Tensor& fl, const Tensor& fr, int groups, const Tensor& grad_out, Tensor* grad_fl,
                  Tensor* grad_fr) {
    const std::int64_t batch = fl.dim(0), ch = fl.dim(1), h = fl.dim(2), w = fl.dim(3);
    const std::int64_t per_group = ch / groups;
    const std::int64_t k = grad_out.dim(2);
    require_shape(grad_out, {batch, groups, k, h, w}, "gwc grad_out");
    const real inv = real(1) / static_cast<real>(per_group);
    const std::int64_t plane = h * w;
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < batch; ++b) {
        for (std::int64_t c = 0; c < ch; ++c) {
            const std::int64_t g = c / per_group;
            const real* l = fl.data() + (b * ch + c) * plane;
            const real* r = fr.data() + (b * ch + c) * plane;
            real* gl = grad_fl ? grad_fl->data() + (b * ch + c) * plane : nullptr;
            real* gr = grad_fr ? grad_fr->data() + (b * ch + c) * plane : nullptr;
            for (std::int64_t j = 0; j < k; ++j) {
                const real* go = grad_out.data() + (((b * groups + g) * k + j) * plane);
                for (std::int64_t y = 0; y < h; ++y) {
                    const real* grow = go + y * w;
                    if (gl) {
                        real* dst = gl + y * w;
                        const real* rrow = r + y * w;
#pragma omp simd
                        for (std::int64_t x = j; x < w; ++x) dst[x] += grow[x] * rrow[x - j] * inv;
                    }
                    if (gr) {
                        real* dst = gr + y * w;
                        const real* lrow = l + y * w;
                        for (std::int64_t x = j; x < w; ++x) dst[x - j] += grow[x] * lrow[x] * inv;
                    }
                }
            }
        }
    }
}

Tensor cat_forward(const Tensor& cl, const Tensor& cr, int k) {
    require_pair(cl, cr, "cat features");
    if (k <= 0) throw ShapeError("cat: k must be positive");
    const std::int64_t batch = cl.dim(0), ch = cl.dim(1), h = cl.dim(2), w = cl.dim(3);
    const std::int64_t plane = h * w;
    Tensor out({batch, 2 * ch, k, h, w});
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < batch; ++b) {
        for (std::int64_t c = 0; c < ch; ++c) {
            const real* l = cl.data() + (b * ch + c) * plane;
            const real* r = cr.data() + (b * ch + c) * plane;
            for (std::int64_t j = 0; j < k; ++j) {
                real* dl = out.data() + (((b * 2 * ch + c) * k + j) * plane);
                real* dr = out.data() + (((b * 2 * ch + ch + c) * k + j) * plane);
                std::copy_n(l, plane, dl);
                for (std::int64_t y = 0; y < h; ++y)
                    for (std::int64_t x = j; x < w; ++x) dr[y * w + x] = r[y * w + x - j];
            }
        }
    }
    return out;
}

void cat_backward(const Tensor& grad_out, Tensor* grad_cl, Tensor* grad_cr) {
    require_rank(grad_out, 5, "cat grad_out");
    const std::int64_t batch = grad_out.dim(0), ch = grad_out.dim(1) / 2, k = grad_out.dim(2);
    const std::int64_t h = grad_out.dim(3), w = grad_out.dim(4);
    const std::int64_t plane = h * w;
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < batch; ++b) {
        for (std::int64_t c = 0; c < ch; ++c) {
            for (std::int64_t j = 0; j < k; ++j) {
                const real* gl = grad_out.data() + (((b * 2 * ch + c) * k + j) * plane);
                const real* gr = grad_out.data() + (((b * 2 * ch + ch + c) * k + j) * plane);
                if (grad_cl) {
                    real* dst = grad_cl->data() + (b * ch + c) * plane;
                    for (std::int64_t p = 0; p < plane; ++p) dst[p] += gl[p];
                }
                if (grad_cr) {
                    real* dst = grad_cr->data() + (b * ch + c) * plane;
                    for (std::int64_t y = 0; y < h; ++y)
                        for (std::int64_t x = j; x < w; ++x) dst[y * w + x - j] += gr[y * w + x];
                }
            }
        }
    }
}

}  // namespace kernels
MFM_NAMESPACE_END
