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

#include <omp.h>

#include "mfm/errors.hpp"
#include "mfm/kernels.hpp"

// Convolution as im2col followed by a register-blocked GEMM. The column buffer
// holds one batch element: rows are (ic, kd, kh, kw), columns output voxels.
MFM_NAMESPACE_BEGIN
namespace kernels {
namespace {

constexpr std::int64_t kTile = 1024;

struct ConvDims {
    std::int64_t batch, ci, d, h, w;
    std::int64_t co, kd, kh, kw;
    std::int64_t od, oh, ow;
    std::int64_t rows;  // ci * kd * kh * kw
    std::int64_t cols;  // od * oh * ow
};

ConvDims conv_dims(const Shape& x, const Shape& w, const ConvGeometry& g) {
    if (x.size() != 5 || w.size() != 5)
        throw ShapeError("conv: expected 5-d input and weight, got " + shape_str(x) + " and " + shape_str(w));
    if (x[1] != w[1])
        throw ShapeError("conv: input channels " + std::to_string(x[1]) + " vs weight " + shape_str(w));
    if (w[2] != g.kernel[0] || w[3] != g.kernel[1] || w[4] != g.kernel[2])
        throw ShapeError("conv: weight " + shape_str(w) + " disagrees with kernel geometry");
    ConvDims d{};
    d.batch = x[0];
    d.ci = x[1];
    d.d = x[2];
    d.h = x[3];
    d.w = x[4];
    d.co = w[0];
    d.kd = w[2];
    d.kh = w[3];
    d.kw = w[4];
    auto out_extent = [](std::int64_t in, int k, int s, int p) {
        const std::int64_t span = in + 2 * p - k;
        if (span < 0 || s <= 0) throw ShapeError("conv: kernel larger than padded input");
        return span / s + 1;
    };
    d.od = out_extent(d.d, g.kernel[0], g.stride[0], g.pad[0]);
    d.oh = out_extent(d.h, g.kernel[1], g.stride[1], g.pad[1]);
    d.ow = out_extent(d.w, g.kernel[2], g.stride[2], g.pad[2]);
    d.rows = d.ci * d.kd * d.kh * d.kw;
    d.cols = d.od * d.oh * d.ow;
    return d;
}

struct RowIndex {
    std::int64_t ic, kd, kh, kw;
};

RowIndex row_index(std::int64_t r, const ConvDims& d) {
    RowIndex idx{};
    idx.kw = r % d.kw;
    idx.kh = (r / d.kw) % d.kh;
    idx.kd = (r / (d.kw * d.kh)) % d.kd;
    idx.ic = r / (d.kw * d.kh * d.kd);
    return idx;
}

void im2col(const real* x, const ConvDims& d, const ConvGeometry& g, real* col) {
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < d.rows; ++r) {
        const RowIndex idx = row_index(r, d);
        const real* plane = x + idx.ic * d.d * d.h * d.w;
        real* out = col + r * d.cols;
        for (std::int64_t od = 0; od < d.od; ++od) {
            const std::int64_t id = od * g.stride[0] - g.pad[0] + idx.kd;
            for (std::int64_t oh = 0; oh < d.oh; ++oh) {
                real* dst = out + (od * d.oh + oh) * d.ow;
                const std::int64_t ih = oh * g.stride[1] - g.pad[1] + idx.kh;
                if (id < 0 || id >= d.d || ih < 0 || ih >= d.h) {
                    std::fill(dst, dst + d.ow, real(0));
                    continue;
                }
                const real* src = plane + (id * d.h + ih) * d.w;
                for (std::int64_t ow = 0; ow < d.ow; ++ow) {
                    const std::int64_t iw = ow * g.stride[2] - g.pad[2] + idx.kw;
                    dst[ow] = (iw >= 0 && iw < d.w) ? src[iw] : real(0);
                }
            }
        }
    }
}

void col2im_add(const real* col, const ConvDims& d, const ConvGeometry& g, real* gx) {
    const std::int64_t per_channel = d.kd * d.kh * d.kw;
#pragma omp parallel for schedule(static)
    for (std::int64_t ic = 0; ic < d.ci; ++ic) {
        real* plane = gx + ic * d.d * d.h * d.w;
        for (std::int64_t q = 0; q < per_channel; ++q) {
            const std::int64_t r = ic * per_channel + q;
            const RowIndex idx = row_index(r, d);
            const real* src_row = col + r * d.cols;
            for (std::int64_t od = 0; od < d.od; ++od) {
                const std::int64_t id = od * g.stride[0] - g.pad[0] + idx.kd;
                if (id < 0 || id >= d.d) continue;
                for (std::int64_t oh = 0; oh < d.oh; ++oh) {
                    const std::int64_t ih = oh * g.stride[1] - g.pad[1] + idx.kh;
                    if (ih < 0 || ih >= d.h) continue;
                    const real* src = src_row + (od * d.oh + oh) * d.ow;
                    real* dst = plane + (id * d.h + ih) * d.w;
                    for (std::int64_t ow = 0; ow < d.ow; ++ow) {
                        const std::int64_t iw = ow * g.stride[2] - g.pad[2] + idx.kw;
                        if (iw >= 0 && iw < d.w) dst[iw] += src[ow];
                    }
                }
            }
        }
    }
}

// out[oc, p] += sum_r w[oc, r] * col[r, p], four output rows per pass.
void gemm_wcol(const real* w, const real* col, const ConvDims& d, real* out) {
    const std::int64_t blocks = (d.co + 3) / 4;
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        const std::int64_t oc0 = blk * 4;
        const std::int64_t nb = std::min<std::int64_t>(4, d.co - oc0);
        for (std::int64_t p0 = 0; p0 < d.cols; p0 += kTile) {
            const std::int64_t len = std::min(kTile, d.cols - p0);
            if (nb == 4) {
                real* o0 = out + (oc0 + 0) * d.cols + p0;
                real* o1 = out + (oc0 + 1) * d.cols + p0;
                real* o2 = out + (oc0 + 2) * d.cols + p0;
                real* o3 = out + (oc0 + 3) * d.cols + p0;
                for (std::int64_t r = 0; r < d.rows; ++r) {
                    const real w0 = w[(oc0 + 0) * d.rows + r];
                    const real w1 = w[(oc0 + 1) * d.rows + r];
                    const real w2 = w[(oc0 + 2) * d.rows + r];
                    const real w3 = w[(oc0 + 3) * d.rows + r];
                    const real* c = col + r * d.cols + p0;
#pragma omp simd
                    for (std::int64_t p = 0; p < len; ++p) {
                        const real cv = c[p];
                        o0[p] += w0 * cv;
                        o1[p] += w1 * cv;
                        o2[p] += w2 * cv;
                        o3[p] += w3 * cv;
                    }
                }
            } else {
                for (std::int64_t i = 0; i < nb; ++i) {
                    real* o = out + (oc0 + i) * d.cols + p0;
                    for (std::int64_t r = 0; r < d.rows; ++r) {
                        const real wv = w[(oc0 + i) * d.rows + r];
                        const real* c = col + r * d.cols + p0;
#pragma omp simd
                        for (std::int64_t p = 0; p < len; ++p) o[p] += wv * c[p];
                    }
                }
            }
        }
    }
}

// dcol[r, p] = sum_oc w[oc, r] * g[oc, p], four column-buffer rows per pass.
void gemm_wt_grad(const real* w, const real* grad, const ConvDims& d, real* dcol) {
    const std::int64_t blocks = (d.rows + 3) / 4;
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
        const std::int64_t r0 = blk * 4;
        const std::int64_t nb = std::min<std::int64_t>(4, d.rows - r0);
        for (std::int64_t p0 = 0; p0 < d.cols; p0 += kTile) {
            const std::int64_t len = std::min(kTile, d.cols - p0);
            for (std::int64_t i = 0; i < nb; ++i) std::fill_n(dcol + (r0 + i) * d.cols + p0, len, real(0));
            if (nb == 4) {
                real* c0 = dcol + (r0 + 0) * d.cols + p0;
                real* c1 = dcol + (r0 + 1) * d.cols + p0;
                real* c2 = dcol + (r0 + 2) * d.cols + p0;
                real* c3 = dcol + (r0 + 3) * d.cols + p0;
                for (std::int64_t oc = 0; oc < d.co; ++oc) {
                    const real* wr = w + oc * d.rows + r0;
                    const real w0 = wr[0], w1 = wr[1], w2 = wr[2], w3 = wr[3];
                    const real* gr = grad + oc * d.cols + p0;
#pragma omp simd
                    for (std::int64_t p = 0; p < len; ++p) {
                        const real gv = gr[p];
                        c0[p] += w0 * gv;
                        c1[p] += w1 * gv;
                        c2[p] += w2 * gv;
                        c3[p] += w3 * gv;
                    }
                }
            } else {
                for (std::int64_t i = 0; i < nb; ++i) {
                    real* c = dcol + (r0 + i) * d.cols + p0;
                    for (std::int64_t oc = 0; oc < d.co; ++oc) {
                        const real wv = w[oc * d.rows + r0 + i];
                        const real* gr = grad + oc * d.cols + p0;
#pragma omp simd
                        for (std::int64_t p = 0; p < len; ++p) c[p] += wv * gr[p];
                    }
                }
            }
        }
    }
}

}  // namespace

Shape conv_output_shape(const Shape& x, const Shape& w, const ConvGeometry& g) {
    const ConvDims d = conv_dims(x, w, g);
    return {d.batch, d.co, d.od, d.oh, d.ow};
}

Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeometry& g) {
    const ConvDims d = conv_dims(x.shape(), w.shape(), g);
    if (bias != nullptr) require_shape(*bias, {d.co}, "conv bias");
    Tensor out({d.batch, d.co, d.od, d.oh, d.ow});
    std::vector<real> col(static_cast<std::size_t>(d.rows * d.cols));
    const std::int64_t in_stride = d.ci * d.d * d.h * d.w;
    const std::int64_t out_stride = d.co * d.cols;
    for (std::int64_t b = 0; b < d.batch; ++b) {
        real* o = out.data() + b * out_stride;
        if (bias != nullptr) {
            for (std::int64_t oc = 0; oc < d.co; ++oc) std::fill_n(o + oc * d.cols, d.cols, (*bias)[oc]);
        }
        im2col(x.data() + b * in_stride, d, g, col.data());
        gemm_wcol(w.data(), col.data(), d, o);
    }
    return out;
}

void conv_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, const ConvGeometry& g, Tensor* grad_x,
                   Tensor* grad_w, Tensor* grad_b) {
    const ConvDims d = conv_dims(x.shape(), w.shape(), g);
    require_shape(grad_out, {d.batch, d.co, d.od, d.oh, d.ow}, "conv grad_out");
    if (grad_x != nullptr) require_shape(*grad_x, x.shape(), "conv grad_x");
    if (grad_w != nullptr) require_shape(*grad_w, w.shape(), "conv grad_w");
    if (grad_b != nullptr) require_shape(*grad_b, {d.co}, "conv grad_b");

    std::vector<real> col(static_cast<std::size_t>(d.rows * d.cols));
    const std::int64_t in_stride = d.ci * d.d * d.h * d.w;
    const std::int64_t out_stride = d.co * d.cols;
    for (std::int64_t b = 0; b < d.batch; ++b) {
        const real* gout = grad_out.data() + b * out_stride;
        if (grad_b != nullptr) {
            for (std::int64_t oc = 0; oc < d.co; ++oc) {
                real s = 0;
                const real* gr = gout + oc * d.cols;
#pragma omp simd reduction(+ : s)
                for (std::int64_t p = 0; p < d.cols; ++p) s += gr[p];
                (*grad_b)[oc] += s;
            }
        }
        if (grad_w != nullptr) {
            im2col(x.data() + b * in_stride, d, g, col.data());
            real* gw = grad_w->data();
#pragma omp parallel for schedule(static)
            for (std::int64_t oc = 0; oc < d.co; ++oc) {
                const real* gr = gout + oc * d.cols;
                for (std::int64_t r = 0; r < d.rows; ++r) {
                    const real* c = col.data() + r * d.cols;
                    real s = 0;
#pragma omp simd reduction(+ : s)
                    for (std::int64_t p = 0; p < d.cols; ++p) s += gr[p] * c[p];
                    gw[oc * d.rows + r] += s;
                }
            }
        }
        if (grad_x != nullptr) {
            gemm_wt_grad(w.data(), gout, d, col.data());
            col2im_add(col.data(), d, g, grad_x->data() + b * in_stride);
        }
    }
}

void set_num_threads(int threads) {
    if (threads >= 1) omp_set_num_threads(threads);
}

int num_threads() { return omp_get_max_threads(); }

}  // namespace kernels
MFM_NAMESPACE_END
