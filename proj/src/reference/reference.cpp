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

#include "reference.hpp"

#include <algorithm>
#include <cmath>

MFM_NAMESPACE_BEGIN
namespace reference {

Tensor conv(const Tensor& x, const Tensor& w, const Tensor* bias, const kernels::ConvGeometry& g) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    const std::int64_t B = xs[0], C = xs[1], D = xs[2], H = xs[3], W = xs[4];
    const std::int64_t O = ws[0];
    const std::int64_t OD = (D + 2 * g.pad[0] - g.kernel[0]) / g.stride[0] + 1;
    const std::int64_t OH = (H + 2 * g.pad[1] - g.kernel[1]) / g.stride[1] + 1;
    const std::int64_t OW = (W + 2 * g.pad[2] - g.kernel[2]) / g.stride[2] + 1;
    Tensor out({B, O, OD, OH, OW});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t o = 0; o < O; ++o)
            for (std::int64_t z = 0; z < OD; ++z)
                for (std::int64_t y = 0; y < OH; ++y)
                    for (std::int64_t xx = 0; xx < OW; ++xx) {
                        double acc = bias ? (*bias)[o] : 0.0;
                        for (std::int64_t c = 0; c < C; ++c)
                            for (int kz = 0; kz < g.kernel[0]; ++kz)
                                for (int ky = 0; ky < g.kernel[1]; ++ky)
                                    for (int kx = 0; kx < g.kernel[2]; ++kx) {
                                        const std::int64_t iz = z * g.stride[0] - g.pad[0] + kz;
                                        const std::int64_t iy = y * g.stride[1] - g.pad[1] + ky;
                                        const std::int64_t ix = xx * g.stride[2] - g.pad[2] + kx;
                                        if (iz < 0 || iz >= D || iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                        acc += static_cast<double>(x.at({b, c, iz, iy, ix})) *
                                               w.at({o, c, kz, ky, kx});
                                    }
                        out.at({b, o, z, y, xx}) = static_cast<real>(acc);
                    }
    return out;
}

void conv_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, const kernels::ConvGeometry& g,
                   Tensor& grad_x, Tensor& grad_w, Tensor& grad_b) {
    const auto& xs = x.shape();
    const auto& os = grad_out.shape();
    const std::int64_t B = xs[0], C = xs[1], D = xs[2], H = xs[3], W = xs[4];
    const std::int64_t O = os[1], OD = os[2], OH = os[3], OW = os[4];
    grad_x = Tensor(x.shape());
    grad_w = Tensor(w.shape());
    grad_b = Tensor({O});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t o = 0; o < O; ++o)
            for (std::int64_t z = 0; z < OD; ++z)
                for (std::int64_t y = 0; y < OH; ++y)
                    for (std::int64_t xx = 0; xx < OW; ++xx) {
                        const real go = grad_out.at({b, o, z, y, xx});
                        grad_b[o] += go;
                        for (std::int64_t c = 0; c < C; ++c)
                            for (int kz = 0; kz < g.kernel[0]; ++kz)
                                for (int ky = 0; ky < g.kernel[1]; ++ky)
                                    for (int kx = 0; kx < g.kernel[2]; ++kx) {
                                        const std::int64_t iz = z * g.stride[0] - g.pad[0] + kz;
                                        const std::int64_t iy = y * g.stride[1] - g.pad[1] + ky;
                                        const std::int64_t ix = xx * g.stride[2] - g.pad[2] + kx;
                                        if (iz < 0 || iz >= D || iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                        grad_x.at({b, c, iz, iy, ix}) += go * w.at({o, c, kz, ky, kx});
                                        grad_w.at({o, c, kz, ky, kx}) += go * x.at({b, c, iz, iy, ix});
                                    }
                    }
}

Tensor upsample2x(const Tensor& x, const std::array<std::int64_t, 3>& size) {
    const auto& s = x.shape();
    Tensor out({s[0], s[1], size[0], size[1], size[2]});
    for (std::int64_t b = 0; b < s[0]; ++b)
        for (std::int64_t c = 0; c < s[1]; ++c)
            for (std::int64_t z = 0; z < size[0]; ++z)
                for (std::int64_t y = 0; y < size[1]; ++y)
                    for (std::int64_t xx = 0; xx < size[2]; ++xx)
                        out.at({b, c, z, y, xx}) = x.at({b, c, z / 2, y / 2, xx / 2});
    return out;
}

Tensor gwc(const Tensor& fl, const Tensor& fr, int groups, int k) {
    const auto& s = fl.shape();
    const std::int64_t B = s[0], C = s[1], H = s[2], W = s[3], per = C / groups;
    Tensor out({B, groups, k, H, W});
    for (std::int64_t b = 0; b < B; ++b)
        for (int g = 0; g < groups; ++g)
            for (int j = 0; j < k; ++j)
                for (std::int64_t y = 0; y < H; ++y)
                    for (std::int64_t x = 0; x < W; ++x) {
                        if (x - j < 0) continue;
                        double acc = 0.0;
                        for (std::int64_t c = g * per; c < (g + 1) * per; ++c)
                            acc += static_cast<double>(fl.at({b, c, y, x})) * fr.at({b, c, y, x - j});
                        out.at({b, g, j, y, x}) = static_cast<real>(acc / static_cast<double>(per));
                    }
    return out;
}

Tensor cat(const Tensor& cl, const Tensor& cr, int k) {
    const auto& s = cl.shape();
    const std::int64_t B = s[0], C = s[1], H = s[2], W = s[3];
    Tensor out({B, 2 * C, k, H, W});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c)
            for (int j = 0; j < k; ++j)
                for (std::int64_t y = 0; y < H; ++y)
                    for (std::int64_t x = 0; x < W; ++x) {
                        out.at({b, c, j, y, x}) = cl.at({b, c, y, x});
                        out.at({b, C + c, j, y, x}) = x - j >= 0 ? cr.at({b, c, y, x - j}) : real(0);
                    }
    return out;
}

namespace {

// Corner-aligned source coordinate, computed in floating point.
void source(std::int64_t o, std::int64_t out, std::int64_t in, std::int64_t& i0, std::int64_t& i1, double& t) {
    const double pos = out > 1 ? static_cast<double>(o) * static_cast<double>(in - 1) / static_cast<double>(out - 1) : 0.0;
    i0 = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(pos)), in - 1);
    i1 = std::min<std::int64_t>(i0 + 1, in - 1);
    t = pos - static_cast<double>(i0);
}

}  // namespace

Tensor bilinear(const Tensor& x, std::int64_t out_h, std::int64_t out_w) {
    const auto& s = x.shape();
    Tensor out({s[0], s[1], out_h, out_w});
    for (std::int64_t b = 0; b < s[0]; ++b)
        for (std::int64_t c = 0; c < s[1]; ++c)
            for (std::int64_t y = 0; y < out_h; ++y)
                for (std::int64_t xx = 0; xx < out_w; ++xx) {
                    std::int64_t y0, y1, x0, x1;
                    double ty, tx;
                    source(y, out_h, s[2], y0, y1, ty);
                    source(xx, out_w, s[3], x0, x1, tx);
                    const double top = (1 - tx) * x.at({b, c, y0, x0}) + tx * x.at({b, c, y0, x1});
                    const double bottom = (1 - tx) * x.at({b, c, y1, x0}) + tx * x.at({b, c, y1, x1});
                    out.at({b, c, y, xx}) = static_cast<real>((1 - ty) * top + ty * bottom);
                }
    return out;
}

Tensor interleave(const std::vector<Tensor>& stages) {
    const auto n = static_cast<std::int64_t>(stages.size());
    const auto& s = stages[0].shape();
    const std::int64_t B = s[0], K = s[1], H = s[2], W = s[3];
    Tensor out({B, n * K, H, W});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t d = 0; d < n * K; ++d)
            for (std::int64_t y = 0; y < H; ++y)
                for (std::int64_t x = 0; x < W; ++x)
                    out.at({b, d, y, x}) = stages[static_cast<std::size_t>(d % n)].at({b, d / n, y, x});
    return out;
}

std::vector<Tensor> deinterleave(const Tensor& full, int n) {
    const auto& s = full.shape();
    const std::int64_t B = s[0], D = s[1], H = s[2], W = s[3];
    std::vector<Tensor> out;
    for (int i = 0; i < n; ++i) out.emplace_back(Shape{B, D / n, H, W});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t m = 0; m < D / n; ++m)
            for (int i = 0; i < n; ++i)
                for (std::int64_t y = 0; y < H; ++y)
                    for (std::int64_t x = 0; x < W; ++x)
                        out[static_cast<std::size_t>(i)].at({b, m, y, x}) = full.at({b, m * n + i, y, x});
    return out;
}

Tensor disparity_lerp(const Tensor& x, int n, int d_max) {
    const auto& s = x.shape();
    const std::int64_t B = s[0], K = s[1], H = s[2], W = s[3];
    Tensor out({B, d_max, H, W});
    for (std::int64_t b = 0; b < B; ++b)
        for (int d = 0; d < d_max; ++d) {
            const double pos = std::min(static_cast<double>(d) / n, static_cast<double>(K - 1));
            const auto j0 = static_cast<std::int64_t>(std::floor(pos));
            const std::int64_t j1 = std::min<std::int64_t>(j0 + 1, K - 1);
            const double t = pos - static_cast<double>(j0);
            for (std::int64_t y = 0; y < H; ++y)
                for (std::int64_t xx = 0; xx < W; ++xx)
                    out.at({b, d, y, xx}) =
                        static_cast<real>((1 - t) * x.at({b, j0, y, xx}) + t * x.at({b, j1, y, xx}));
        }
    return out;
}

namespace {

template <class Fn>
void for_each_column(const Tensor& x, Fn&& fn) {
    const std::int64_t B = x.dim(0), L = x.dim(1), inner = x.numel() / (B * L);
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t p = 0; p < inner; ++p) fn(b * L * inner + p, L, inner);
}

}  // namespace

Tensor softmax(const Tensor& x) {
    Tensor out(x.shape());
    for_each_column(x, [&](std::int64_t base, std::int64_t L, std::int64_t stride) {
        double mx = -INFINITY, sum = 0.0;
        for (std::int64_t l = 0; l < L; ++l) mx = std::max(mx, static_cast<double>(x[base + l * stride]));
        for (std::int64_t l = 0; l < L; ++l) sum += std::exp(x[base + l * stride] - mx);
        for (std::int64_t l = 0; l < L; ++l)
            out[base + l * stride] = static_cast<real>(std::exp(x[base + l * stride] - mx) / sum);
    });
    return out;
}

Tensor log_softmax(const Tensor& x) {
    Tensor out(x.shape());
    for_each_column(x, [&](std::int64_t base, std::int64_t L, std::int64_t stride) {
        double mx = -INFINITY, sum = 0.0;
        for (std::int64_t l = 0; l < L; ++l) mx = std::max(mx, static_cast<double>(x[base + l * stride]));
        for (std::int64_t l = 0; l < L; ++l) sum += std::exp(x[base + l * stride] - mx);
        for (std::int64_t l = 0; l < L; ++l)
            out[base + l * stride] = static_cast<real>(x[base + l * stride] - mx - std::log(sum));
    });
    return out;
}

Tensor soft_argmax(const Tensor& p) {
    const std::int64_t B = p.dim(0), D = p.dim(1), H = p.dim(2), W = p.dim(3);
    Tensor out({B, H, W});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t y = 0; y < H; ++y)
            for (std::int64_t x = 0; x < W; ++x) {
                double acc = 0.0;
                for (std::int64_t d = 0; d < D; ++d) acc += static_cast<double>(d) * p.at({b, d, y, x});
                out.at({b, y, x}) = static_cast<real>(acc);
            }
    return out;
}

Tensor parabolic(const Tensor& p) {
    const std::int64_t B = p.dim(0), D = p.dim(1), H = p.dim(2), W = p.dim(3);
    Tensor out({B, H, W});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t y = 0; y < H; ++y)
            for (std::int64_t x = 0; x < W; ++x) {
                std::int64_t best = 0;
                for (std::int64_t d = 0; d < D; ++d)
                    if (p.at({b, d, y, x}) > p.at({b, best, y, x})) best = d;
                double result = static_cast<double>(best);
                if (best > 0 && best < D - 1) {
                    const double l = p.at({b, best - 1, y, x}), c = p.at({b, best, y, x}),
                                 r = p.at({b, best + 1, y, x});
                    const double den = l - 2 * c + r;
                    if (std::fabs(den) >= 1e-12) result += std::max(-0.5, std::min(0.5, (l - r) / (2 * den)));
                }
                out.at({b, y, x}) = static_cast<real>(result);
            }
    return out;
}

double epe(const Tensor& pred, const Tensor& gt, const ValidMask& mask) {
    double sum = 0.0;
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        if (!mask[i]) continue;
        sum += std::fabs(static_cast<double>(pred[i]) - gt[i]);
        ++count;
    }
    return sum / static_cast<double>(count);
}

double pct_error(const Tensor& pred, const Tensor& gt, const ValidMask& mask, double t) {
    std::int64_t bad = 0, count = 0;
    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        if (!mask[i]) continue;
        ++count;
        if (std::fabs(static_cast<double>(pred[i]) - gt[i]) > t) ++bad;
    }
    return static_cast<double>(bad) / static_cast<double>(count);
}

double d1(const Tensor& pred, const Tensor& gt, const ValidMask& mask) {
    std::int64_t bad = 0, count = 0;
    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        if (!mask[i]) continue;
        ++count;
        const double err = std::fabs(static_cast<double>(pred[i]) - gt[i]);
        if (err > 3.0 && err > 0.05 * gt[i]) ++bad;
    }
    return static_cast<double>(bad) / static_cast<double>(count);
}

double peak_deviation(const Tensor& volume, const Tensor& gt, const ValidMask& mask, double t) {
    const std::int64_t B = volume.dim(0), D = volume.dim(1), H = volume.dim(2), W = volume.dim(3);
    std::int64_t bad = 0, count = 0;
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t y = 0; y < H; ++y)
            for (std::int64_t x = 0; x < W; ++x) {
                const std::int64_t i = (b * H + y) * W + x;
                if (!mask[i]) continue;
                ++count;
                std::int64_t best = 0;
                for (std::int64_t d = 1; d < D; ++d)
                    if (volume.at({b, d, y, x}) > volume.at({b, best, y, x})) best = d;
                if (std::fabs(static_cast<double>(best) - gt[i]) > t) ++bad;
            }
    return static_cast<double>(bad) / static_cast<double>(count);
}

std::vector<std::vector<double>> stage_label_grid(double d_gt, int n, int k) {
    std::vector<std::vector<double>> grid(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(k)));
    for (int i = 0; i < n; ++i)
        for (int m = 0; m < k; ++m) {
            const double diff = m * n + i - d_gt;
            grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] = std::exp(-diff * diff);
        }
    return grid;
}

}  // namespace reference
MFM_NAMESPACE_END
