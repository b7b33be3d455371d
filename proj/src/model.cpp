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

#include "mfm/model.hpp"

#include "mfm/assembly.hpp"
#include "mfm/errors.hpp"
#include "mfm/regression.hpp"
#include "mfm/supervision.hpp"

MFM_NAMESPACE_BEGIN

Network::Network(const Config& cfg)
    : cfg_(validate_config(cfg)),
      rng_(cfg.train.seed),
      features_(store_, cfg_, rng_),
      costvol_(store_, cfg_, rng_),
      aggregation_(store_, cfg_, rng_) {}

ForwardResult Network::forward(const ImagePair& pair) const {
    check_pair(pair, cfg_.n);
    const std::int64_t height = pair.height(), width = pair.width();
    const auto [fl, fr] = features_.extract(pair);
    const RawCorrelationVolume raw = costvol_.build(fl, fr);
    const std::vector<StageScoreVolume> stages = aggregation_.forward_all(raw);

    ForwardResult result;
    for (const auto& s : stages) result.stage_scores.push_back(s.values);
    if (cfg_.variant == Variant::baseline) {
        result.scores = disparity_lerp(upsample_stage(stages.front().values, height, width), cfg_.n, cfg_.d_max);
    } else {
        std::vector<Var> full;
        for (const auto& s : stages) full.push_back(upsample_stage(s.values, height, width));
        result.scores = interleave(full, cfg_.n);
    }
    result.probabilities = normalize(result.scores);
    result.disparity = soft_argmax(result.probabilities);
    return result;
}

LossTerms Network::loss(const ForwardResult& result, const Sample& batch) const {
    LossTerms terms;
    terms.l1 = l1_loss(result.disparity, batch.gt, batch.mask);
    if (cfg_.variant == Variant::baseline) {
        total_loss(0.0, terms.l1.item());
        terms.total = terms.l1;
        return terms;
    }
    const auto [gt_low, mask_low] = downsample_nearest(batch.gt, batch.mask, cfg_.n);
    const std::vector<StageLabelVolume> labels = stage_labels(gt_low, mask_low, cfg_);
    terms.stage = stage_loss(result.stage_scores, labels, mask_low);
    terms.total = total_loss(terms.stage, terms.l1);
    return terms;
}

FullCostVolume Network::cost_volume(const ForwardResult& result) { return {result.probabilities.value(), true}; }

DisparityMap Network::predict(const ImagePair& pair) const { return parabolic_subpixel(cost_volume(forward(pair))); }

MFM_NAMESPACE_END
