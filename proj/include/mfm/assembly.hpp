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

#include <filesystem>
#include <span>
#include <vector>

#include "mfm/autograd.hpp"
#include "mfm/types.hpp"

MFM_NAMESPACE_BEGIN

/// Corner-aligned bilinear resize of every disparity slice: [B,k,h,w] -> [B,k,H,W].
Var upsample_stage(const Var& p, std::int64_t height, std::int64_t width);

/// full[d] = stages[d % n][d / n]; stages are [B,k,H,W].
Var interleave(std::span<const Var> stages, int n);
FullCostVolume interleave(std::span<const Tensor> stages, int n);

std::vector<Tensor> deinterleave(const FullCostVolume& volume, int n);

/// Linear interpolation along disparity: [B,k,H,W] -> [B,D_max,H,W], level j at d = n*j.
Var disparity_lerp(const Var& p, int n, int d_max);

/// Softmax over the disparity axis.
Var normalize(const Var& scores);
FullCostVolume normalize(const FullCostVolume& volume);

/// Flat little-endian container: magic "MFMV", u32 version, u32 element
/// bytes, u32 rank, u64 dims, u8 normalized, then row-major values.
void write_cost_volume(const std::filesystem::path& path, const FullCostVolume& volume);
FullCostVolume read_cost_volume(const std::filesystem::path& path);

MFM_NAMESPACE_END
