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

#include "mfm/autograd.hpp"
#include "mfm/types.hpp"

MFM_NAMESPACE_BEGIN

/// Expected disparity under a normalized [B,D,H,W] volume -> [B,H,W].
Var soft_argmax(const Var& probabilities);
DisparityMap soft_argmax(const FullCostVolume& volume);

/// Three-point vertex offset around index `peak`; zero at the borders or for a flat denominator.
double parabolic_offset(double left, double centre, double right);
DisparityMap parabolic_subpixel(const FullCostVolume& volume);

/// Integer argmax over disparity (first maximum wins) -> [B,H,W].
Tensor argmax_disparity(const FullCostVolume& volume);

/// Writes `.png` as 16-bit round(d*256), anything else as PFM; masked-out pixels
/// become 0 in PNG and +inf in PFM. Expects a single map.
void write_disparity(const std::filesystem::path& path, const DisparityMap& disp, const ValidMask& mask);

MFM_NAMESPACE_END
