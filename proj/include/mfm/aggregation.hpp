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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfm/config.hpp"
#include "mfm/costvol.hpp"
#include "mfm/nn.hpp"

MFM_NAMESPACE_BEGIN

inline constexpr int kOriStage = -1;

struct StageFeatureVolume {
    Var values;  // [B, vol_channels, k, h, w]
    int stage = kOriStage;
};

struct StageScoreVolume {
    Var values;  // [B, k, h, w]
    int stage = 0;
};

/// Encoder-decoder over (k, h, w): two stride-2 levels, nearest upsampling,
/// additive skips, and a final linear convolution.
class Hourglass {
public:
    Hourglass() = default;
    Hourglass(ParameterStore& store, const std::string& name, int channels, Rng& rng);

    [[nodiscard]] Var operator()(const Var& x) const;
    [[nodiscard]] const ConvLayer& output_layer() const noexcept { return out_; }

private:
    ConvLayer down1_, conv1_, down2_, conv2_, up1_, up0_, out_;
};

struct TraceEvent {
    std::string op;  // "init_ori", "stage_decouple", "mutual_aid_decode", "head"
    int stage = kOriStage;
    std::vector<const void*> inputs;
    const void* output = nullptr;
};

using TraceHook = std::function<void(const TraceEvent&)>;

class Aggregator {
public:
    Aggregator(ParameterStore& store, const Config& cfg, Rng& rng);

    [[nodiscard]] StageFeatureVolume init_ori(const RawCorrelationVolume& raw) const;
    /// F^s = F^ori + De_s(prev).
    [[nodiscard]] StageFeatureVolume stage_decouple(const StageFeatureVolume& prev, const StageFeatureVolume& ori,
                                                    int s) const;
    /// V = sum of all stage features except stage s.
    [[nodiscard]] Var voting(std::span<const StageFeatureVolume> features, int s) const;
    /// Scores for stage s; uses V^s only for the full variant.
    [[nodiscard]] StageScoreVolume mutual_aid_decode(std::span<const StageFeatureVolume> features, int s) const;

    /// n score volumes, except for the baseline variant which yields one
    /// volume over k low-resolution levels.
    [[nodiscard]] std::vector<StageScoreVolume> forward_all(const RawCorrelationVolume& raw) const;

    [[nodiscard]] const Hourglass& hourglass(int s) const { return hourglasses_.at(static_cast<std::size_t>(s)); }
    void set_trace(TraceHook hook) { trace_ = std::move(hook); }

private:
    void emit(TraceEvent event) const {
        if (trace_) trace_(event);
    }
    void check_stage(int s) const;
    [[nodiscard]] std::vector<StageScoreVolume> decode_head(const StageFeatureVolume& last) const;

    Variant variant_;
    int n_;
    int vol_;
    ConvLayer ori0_, ori1_;
    std::vector<Hourglass> hourglasses_;
    std::vector<ConvLayer> vote_;
    std::vector<ConvLayer> decode0_, decode1_;
    TraceHook trace_;
};

MFM_NAMESPACE_END
