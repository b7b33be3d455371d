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

#include <vector>

#include "mfm/kernels.hpp"
#include "mfm/tensor.hpp"
#include "mfm/types.hpp"

// Serial loop implementations that mirror each optimized kernel. Used only by
// the tests and the benchmarks.

MFM_NAMESPACE_BEGIN
namespace reference {

Tensor conv(const Tensor& x, const Tensor& w, const Tensor* bias, const kernels::ConvGeometry& g);
void conv_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, const kernels::ConvGeometry& g,
                   Tensor& grad_x, Tensor& grad_w, Tensor& grad_b);

Tensor upsample2x(const Tensor& x, const std::array<std::int64_t, 3>& size);

Tensor gwc(const Tensor& fl, const Tensor& fr, int groups, int k);
Tensor cat(const Tensor& cl, const Tensor& cr, int k);

Tensor bilinear(const Tensor& x, std::int64_t out_h, std::int64_t out_w);
Tensor interleave(const std::vector<Tensor>& stages);
std::vector<Tensor> deinterleave(const Tensor& full, int n);
Tensor disparity_lerp(const Tensor& x, int n, int d_max);

Tensor softmax(const Tensor& x);
Tensor log_softmax(const Tensor& x);
Tensor soft_argmax(const Tensor& p);
Tensor parabolic(const Tensor& p);

double epe(const Tensor& pred, const Tensor& gt, const ValidMask& mask);
double pct_error(const Tensor& pred, const Tensor& gt, const ValidMask& mask, double t);
double d1(const Tensor& pred, const Tensor& gt, const ValidMask& mask);
double peak_deviation(const Tensor& volume, const Tensor& gt, const ValidMask& mask, double t);

/// exp(-(m*n + i - d)^2) over the full (m, i) grid for one pixel, indexed [i][m].
std::vector<std::vector<double>> stage_label_grid(double d_gt, int n, int k);

}  // namespace reference
MFM_NAMESPACE_END
