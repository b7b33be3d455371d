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
#include <filesystem>
#include <span>
#include <vector>

#include "mfm/data.hpp"
#include "mfm/types.hpp"

MFM_NAMESPACE_BEGIN

class Network;

double epe(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask);
/// Fraction of valid pixels with |pred - gt| > threshold.
double pct_error(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask, double threshold);
/// Fraction of valid pixels with |pred - gt| > max(3, 0.05 * gt).
double d1(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask);
/// Per threshold, the fraction of valid pixels whose volume argmax is more than t away from gt.
std::vector<double> peak_deviation(const FullCostVolume& volume, const DisparityMap& gt, const ValidMask& mask,
                                   const std::vector<double>& thresholds = {1.0, 3.0});

/// Color scale for error maps: 0 px dark blue, then blue, cyan, yellow, red at
/// kErrorMapMax px and beyond. Invalid pixels are black.
inline constexpr double kErrorMapMax = 4.0;
std::array<std::uint8_t, 3> error_color(double error);
void error_map(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask,
               const std::filesystem::path& out_path);

struct Metrics {
    double epe = 0.0;
    double bad1 = 0.0;  // > 1 px
    double bad3 = 0.0;  // > 3 px
    double d1 = 0.0;
    std::int64_t pixels = 0;
};

Metrics evaluate(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask);

/// Pixel-weighted metrics of parabolic predictions over a dataset.
Metrics evaluate_network(const Network& net, std::span<const Sample> samples, int batch_size = 1);

MFM_NAMESPACE_END
