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

#include <cstdint>
#include <vector>

#include "mfm/tensor.hpp"

MFM_NAMESPACE_BEGIN

/// Rectified stereo pair, channel-first: left and right are [B, 3, H, W] in [0, 1].
struct ImagePair {
    Tensor left;
    Tensor right;

    [[nodiscard]] std::int64_t batch() const { return left.dim(0); }
    [[nodiscard]] std::int64_t height() const { return left.dim(2); }
    [[nodiscard]] std::int64_t width() const { return left.dim(3); }
};

/// Throws ShapeError unless both images share a [B,3,H,W] shape with H and W divisible by n.
void check_pair(const ImagePair& pair, int n);

enum class Resolution { full, low };

/// Per-pixel disparity [B, H, W], always in full-resolution pixel units.
struct DisparityMap {
    Tensor values;
    Resolution resolution = Resolution::full;
};

/// Validity flags aligned with a DisparityMap.
struct ValidMask {
    Shape shape;
    std::vector<std::uint8_t> flags;

    static ValidMask all(const Shape& shape, bool value = true);
    [[nodiscard]] bool operator[](std::int64_t i) const { return flags[static_cast<std::size_t>(i)] != 0; }
    [[nodiscard]] std::int64_t count() const;
    [[nodiscard]] std::int64_t size() const { return static_cast<std::int64_t>(flags.size()); }
    friend bool operator==(const ValidMask&, const ValidMask&) = default;
};

/// Full-resolution similarity distribution [B, D_max, H, W].
struct FullCostVolume {
    Tensor scores;
    bool normalized = false;
};

MFM_NAMESPACE_END
