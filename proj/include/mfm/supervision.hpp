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

#include <span>
#include <utility>
#include <vector>

#include "mfm/autograd.hpp"
#include "mfm/config.hpp"
#include "mfm/types.hpp"

MFM_NAMESPACE_BEGIN

struct StageLabelVolume {
    Tensor values;  // [B, k, h, w], exp(-(m*n + i - d_gt)^2); 1 at masked pixels
    int stage = 0;
};

/// Nearest-pixel corner-aligned resampling of [B,H,W] ground truth to
/// [B,H/n,W/n]; values stay in full-resolution units.
std::pair<DisparityMap, ValidMask> downsample_nearest(const DisparityMap& gt, const ValidMask& mask, int n);

std::vector<StageLabelVolume> stage_labels(const DisparityMap& gt_low, const ValidMask& mask_low, const Config& cfg);

/// Per-stage cross-entropy between softmaxed scores and labels normalized over
/// cells, averaged over valid low-resolution pixels.
Var stage_loss(std::span<const Var> scores, std::span<const StageLabelVolume> labels, const ValidMask& mask_low);

/// Mean |pred - gt| over valid pixels; pred is [B,H,W].
Var l1_loss(const Var& pred, const DisparityMap& gt, const ValidMask& mask);
double l1_loss(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask);

Var total_loss(const Var& l_stage, const Var& l_1);
double total_loss(double l_stage, double l_1);

MFM_NAMESPACE_END
