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

#include "mfm/aggregation.hpp"
#include "mfm/config.hpp"
#include "mfm/costvol.hpp"
#include "mfm/data.hpp"
#include "mfm/features.hpp"
#include "mfm/nn.hpp"

MFM_NAMESPACE_BEGIN

struct ForwardResult {
    std::vector<Var> stage_scores;  // low resolution [B,k,h,w]; one entry for the baseline variant
    Var scores;                     // [B,D_max,H,W] before softmax
    Var probabilities;              // softmax over disparity
    Var disparity;                  // soft-argmax [B,H,W]
};

struct LossTerms {
    Var total;
    Var l1;
    Var stage;  // undefined for the baseline variant
};

/// Complete model for one ablation variant.
class Network {
public:
    explicit Network(const Config& cfg);
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    [[nodiscard]] const Config& config() const noexcept { return cfg_; }
    [[nodiscard]] ParameterStore& parameters() noexcept { return store_; }
    [[nodiscard]] const ParameterStore& parameters() const noexcept { return store_; }
    [[nodiscard]] const FeatureExtractor& features() const noexcept { return features_; }
    [[nodiscard]] const CostVolumeBuilder& cost_volume_builder() const noexcept { return costvol_; }
    [[nodiscard]] Aggregator& aggregator() noexcept { return aggregation_; }

    [[nodiscard]] ForwardResult forward(const ImagePair& pair) const;
    [[nodiscard]] LossTerms loss(const ForwardResult& result, const Sample& batch) const;

    [[nodiscard]] static FullCostVolume cost_volume(const ForwardResult& result);
    /// Parabolic sub-pixel disparity for inference and metrics.
    [[nodiscard]] DisparityMap predict(const ImagePair& pair) const;

private:
    Config cfg_;
    ParameterStore store_;
    Rng rng_;
    FeatureExtractor features_;
    CostVolumeBuilder costvol_;
    Aggregator aggregation_;
};

MFM_NAMESPACE_END
