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

#include <utility>
#include <vector>

#include "mfm/config.hpp"
#include "mfm/nn.hpp"
#include "mfm/types.hpp"

MFM_NAMESPACE_BEGIN

enum class Side { left, right };

struct FeatureMap {
    Var values;  // [B, feat_channels, H/n, W/n]
    Side side = Side::left;
};

/// Shared-weight 2-d extractor: stride-2 stem, residual blocks, one stride-2
/// stage per remaining factor of two, and a linear projection to feat_channels.
class FeatureExtractor {
public:
    FeatureExtractor(ParameterStore& store, const Config& cfg, Rng& rng);

    /// images: [B, 3, H, W] -> [B, feat_channels, H/n, W/n]
    [[nodiscard]] Var operator()(const Var& images) const;

    [[nodiscard]] std::pair<FeatureMap, FeatureMap> extract(const ImagePair& pair) const;

    [[nodiscard]] int factor() const noexcept { return n_; }

private:
    struct ResBlock {
        ConvLayer a, b;
    };
    struct Stage {
        ConvLayer down;
        std::vector<ResBlock> blocks;
    };

    int n_;
    std::vector<Stage> stages_;
    ConvLayer project_;
};

MFM_NAMESPACE_END
