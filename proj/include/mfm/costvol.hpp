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

#include "mfm/config.hpp"
#include "mfm/features.hpp"
#include "mfm/nn.hpp"

MFM_NAMESPACE_BEGIN

struct RawCorrelationVolume {
    Var values;  // [B, gwc_groups + 2*cat_channels, k, h, w]
};

/// Group-mean correlation; level j pairs left column x with right column x - j.
Var gwc_volume(const Var& fl, const Var& fr, int groups, int k);

/// Concatenation volume of already-compressed features: [cl(x) ; cr(x - j)].
Var cat_volume(const Var& cl, const Var& cr, int k);

/// Owns the 1x1 compression shared by both views of the cat volume.
class CostVolumeBuilder {
public:
    CostVolumeBuilder(ParameterStore& store, const Config& cfg, Rng& rng);

    [[nodiscard]] Var compress(const Var& features) const { return compress_(features); }
    [[nodiscard]] RawCorrelationVolume build(const FeatureMap& fl, const FeatureMap& fr) const;

private:
    int groups_;
    int k_;
    ConvLayer compress_;
};

MFM_NAMESPACE_END
