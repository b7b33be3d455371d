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

#include <array>
#include <cstdint>
#include <vector>

#include "mfm/tensor.hpp"

// OpenMP-parallel compute kernels. Every kernel writes each output element from
// exactly one thread and sums in a fixed order, so results do not depend on the
// thread count. Gradient kernels accumulate into their output arguments.
MFM_NAMESPACE_BEGIN
namespace kernels {

/// Kernel size, stride and zero padding per spatial axis (depth, height, width).
struct ConvGeometry {
    std::array<int, 3> kernel{3, 3, 3};
    std::array<int, 3> stride{1, 1, 1};
    std::array<int, 3> pad{1, 1, 1};
};

/// x [B,Ci,D,H,W], w [Co,Ci,KD,KH,KW] -> [B,Co,OD,OH,OW].
Shape conv_output_shape(const Shape& x, const Shape& w, const ConvGeometry& g);
Tensor conv_forward(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeometry& g);
void conv_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, const ConvGeometry& g, Tensor* grad_x,
                   Tensor* grad_w, Tensor* grad_b);

/// Factor-2 nearest upsampling of the three trailing axes of [B,C,d,h,w] to
/// `size`; requires (size[a] + 1) / 2 == input extent on every axis.
Tensor upsample2x_forward(const Tensor& x, const std::array<std::int64_t, 3>& size);
void upsample2x_backward(const Tensor& grad_out, Tensor& grad_x);

/// Group-wise correlation [B,C,h,w] x2 -> [B,G,k,h,w], group-mean inner products.
Tensor gwc_forward(const Tensor& fl, const Tensor& fr, int groups, int k);
void gwc_backward(const Tensor& fl, const Tensor& fr, int groups, const Tensor& grad_out, Tensor* grad_fl,
                  Tensor* grad_fr);

/// Concatenation volume [B,C,h,w] x2 -> [B,2C,k,h,w].
Tensor cat_forward(const Tensor& cl, const Tensor& cr, int k);
void cat_backward(const Tensor& grad_out, Tensor* grad_cl, Tensor* grad_cr);

/// Corner-aligned bilinear resize of [B,C,h,w] to [B,C,H,W].
Tensor bilinear_forward(const Tensor& x, std::int64_t out_h, std::int64_t out_w);
void bilinear_backward(const Tensor& grad_out, Tensor& grad_x);

/// Softmax and log-softmax along axis 1 of a [B,D,...] tensor.
Tensor softmax_forward(const Tensor& x);
void softmax_backward(const Tensor& y, const Tensor& grad_y, Tensor& grad_x);
Tensor log_softmax_forward(const Tensor& x);
void log_softmax_backward(const Tensor& y, const Tensor& grad_y, Tensor& grad_x);

/// n volumes [B,k,H,W] -> [B,n*k,H,W] with out[:, m*n+i] = stages[i][:, m].
Tensor interleave_forward(const std::vector<const Tensor*>& stages);
/// Inverse permutation of interleave_forward.
std::vector<Tensor> deinterleave(const Tensor& full, int n);

/// Expected disparity sum_d d * p[:, d] of a [B,D,H,W] distribution -> [B,H,W].
Tensor soft_argmax_forward(const Tensor& p);
void soft_argmax_backward(const Tensor& grad_out, Tensor& grad_p);

/// Linear interpolation along axis 1 from k levels at stride n to d_max
/// candidates: [B,k,H,W] -> [B,d_max,H,W]; beyond the last level the value is held.
Tensor disparity_lerp_forward(const Tensor& x, int n, int d_max);
void disparity_lerp_backward(const Tensor& grad_out, int n, Tensor& grad_x);

/// Sets the OpenMP worker count (values < 1 keep the runtime default).
void set_num_threads(int threads);
int num_threads();

}  // namespace kernels
MFM_NAMESPACE_END
