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

#include "mfm/aggregation.hpp"

#include <array>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

Hourglass::Hourglass(ParameterStore& store, const std::string& name, int channels, Rng& rng) {
    const int c = channels, c2 = 2 * channels;
    down1_ = make_conv3d(store, name + ".down1", c, c2, 3, 2, rng);
    conv1_ = make_conv3d(store, name + ".conv1", c2, c2, 3, 1, rng);
    down2_ = make_conv3d(store, name + ".down2", c2, c2, 3, 2, rng);
    conv2_ = make_conv3d(store, name + ".conv2", c2, c2, 3, 1, rng);
    up1_ = make_conv3d(store, name + ".up1", c2, c2, 3, 1, rng);
    up0_ = make_conv3d(store, name + ".up0", c2, c, 3, 1, rng);
    out_ = make_conv3d(store, name + ".out", c, c, 3, 1, rng);
}

namespace {

std::array<std::int64_t, 3> spatial(const Var& x) {
    const Shape& s = x.shape();
    return {s[2], s[3], s[4]};
}

}  // namespace

Var Hourglass::operator()(const Var& x) const {
    if (x.shape().size() != 5) throw ShapeError("hourglass expects [B,C,D,H,W], got " + shape_str(x.shape()));
    const Var a1 = activate(conv1_(activate(down1_(x))));
    const Var a2 = activate(conv2_(activate(down2_(a1))));
    const Var u1 = activate(add(up1_(upsample2x(a2, spatial(a1))), a1));
    const Var u0 = activate(add(up0_(upsample2x(u1, spatial(x))), x));
    return out_(u0);
}

Aggregator::Aggregator(ParameterStore& store, const Config& cfg, Rng& rng)
    : variant_(cfg.variant), n_(cfg.n), vol_(cfg.vol_channels) {
    ori0_ = make_conv3d(store, "aggregation.ori0", cfg.raw_channels(), vol_, 3, 1, rng);
    ori1_ = make_conv3d(store, "aggregation.ori1", vol_, vol_, 3, 1, rng);
    for (int s = 0; s < n_; ++s)
        hourglasses_.emplace_back(store, "aggregation.stage" + std::to_string(s) + ".hourglass", vol_, rng);

    const bool per_stage = variant_ == Variant::full || variant_ == Variant::multistage;
    const int heads = per_stage ? n_ : 1;
    for (int s = 0; s < heads; ++s) {
        const std::string prefix = per_stage ? "aggregation.stage" + std::to_string(s) : std::string("aggregation.head");
        int in = vol_;
        if (variant_ == Variant::full) {
            vote_.push_back(make_conv3d(store, prefix + ".vote", vol_, vol_, 3, 1, rng));
            in = 2 * vol_;
        }
        const int out = variant_ == Variant::decouple ? n_ : 1;
        decode0_.push_back(make_conv3d(store, prefix + ".decode0", in, vol_, 3, 1, rng));
        decode1_.push_back(make_conv3d(store, prefix + ".decode1", vol_, out, 3, 1, rng));
    }
}

void Aggregator::check_stage(int s) const {
    if (s < 0 || s >= n_)
        throw IndexError("stage " + std::to_string(s) + " outside [0, " + std::to_string(n_) + ")");
}

StageFeatureVolume Aggregator::init_ori(const RawCorrelationVolume& raw) const {
    Var out = activate(ori1_(activate(ori0_(raw.values))));
    emit({"init_ori", kOriStage, {raw.values.id()}, out.id()});
    return {std::move(out), kOriStage};
}

StageFeatureVolume Aggregator::stage_decouple(const StageFeatureVolume& prev, const StageFeatureVolume& ori,
                                              int s) const {
    check_stage(s);
    if (prev.values.shape() != ori.values.shape())
        throw ShapeError("stage input " + shape_str(prev.values.shape()) + " does not match F^ori " +
                         shape_str(ori.values.shape()));
    Var out = add(ori.values, hourglasses_[static_cast<std::size_t>(s)](prev.values));
    emit({"stage_decouple", s, {prev.values.id(), ori.values.id()}, out.id()});
    return {std::move(out), s};
}

Var Aggregator::voting(std::span<const StageFeatureVolume> features, int s) const {
    check_stage(s);
    if (static_cast<int>(features.size()) != n_)
        throw ArityError("expected " + std::to_string(n_) + " stage features, got " +
                         std::to_string(features.size()));
    std::vector<Var> others;
    for (const auto& f : features) {
        if (f.values.shape() != features[0].values.shape()) throw ShapeError("stage feature shapes differ");
        if (f.stage != s) others.push_back(f.values);
    }
    if (others.size() != features.size() - 1) throw StateError("stage " + std::to_string(s) + " is not unique");
    return add_all(others);
}

StageScoreVolume Aggregator::mutual_aid_decode(std::span<const StageFeatureVolume> features, int s) const {
    check_stage(s);
    if (variant_ != Variant::full && variant_ != Variant::multistage)
        throw StateError(std::string("per-stage decoding is not part of the ") + std::string(variant_name(variant_)) +
                         " variant");
    const auto idx = static_cast<std::size_t>(s);
    const StageFeatureVolume* own = nullptr;
    for (const auto& f : features)
        if (f.stage == s) own = &f;
    if (own == nullptr) throw IndexError("stage " + std::to_string(s) + " missing from stage features");

    Var in = own->values;
    std::vector<const void*> inputs{own->values.id()};
    if (variant_ == Variant::full) {
        const Var vs = activate(vote_[idx](voting(features, s)));
        const std::array<Var, 2> parts{vs, own->values};
        in = concat_channels(parts);
        for (const auto& f : features)
            if (f.stage != s) inputs.push_back(f.values.id());
    }
    const Var score = decode1_[idx](activate(decode0_[idx](in)));
    const Shape& sh = score.shape();
    Var out = reshape(score, {sh[0], sh[2], sh[3], sh[4]});
    emit({"mutual_aid_decode", s, std::move(inputs), out.id()});
    return {std::move(out), s};
}

std::vector<StageScoreVolume> Aggregator::decode_head(const StageFeatureVolume& last) const {
    const Var score = decode1_[0](activate(decode0_[0](last.values)));
    const Shape& sh = score.shape();
    std::vector<StageScoreVolume> out;
    for (std::int64_t c = 0; c < sh[1]; ++c) {
        Var slice = sh[1] == 1 ? score : slice_channels(score, c, c + 1);
        out.push_back({reshape(slice, {sh[0], sh[2], sh[3], sh[4]}), static_cast<int>(c)});
        emit({"head", static_cast<int>(c), {last.values.id()}, out.back().values.id()});
    }
    return out;
}

std::vector<StageScoreVolume> Aggregator::forward_all(const RawCorrelationVolume& raw) const {
    const StageFeatureVolume ori = init_ori(raw);
    std::vector<StageFeatureVolume> features;
    features.reserve(static_cast<std::size_t>(n_));
    for (int s = 0; s < n_; ++s) features.push_back(stage_decouple(s == 0 ? ori : features.back(), ori, s));

    if (variant_ == Variant::baseline || variant_ == Variant::decouple) return decode_head(features.back());
    std::vector<StageScoreVolume> scores;
    for (int s = 0; s < n_; ++s) scores.push_back(mutual_aid_decode(features, s));
    return scores;
}

MFM_NAMESPACE_END
