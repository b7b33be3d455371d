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

#include "mfm/costvol.hpp"

#include <array>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

Var gwc_volume(const Var& fl, const Var& fr, int groups, int k) {
    Tensor out = kernels::gwc_forward(fl.value(), fr.value(), groups, k);
    return Var::make(std::move(out), {fl, fr}, [fl, fr, groups](const Tensor& g, const Tensor&) {
        kernels::gwc_backward(fl.value(), fr.value(), groups, g, fl.requires_grad() ? &fl.grad_buffer() : nullptr,
                              fr.requires_grad() ? &fr.grad_buffer() : nullptr);
    });
}

Var cat_volume(const Var& cl, const Var& cr, int k) {
    Tensor out = kernels::cat_forward(cl.value(), cr.value(), k);
    return Var::make(std::move(out), {cl, cr}, [cl, cr](const Tensor& g, const Tensor&) {
        kernels::cat_backward(g, cl.requires_grad() ? &cl.grad_buffer() : nullptr,
                              cr.requires_grad() ? &cr.grad_buffer() : nullptr);
    });
}

CostVolumeBuilder::CostVolumeBuilder(ParameterStore& store, const Config& cfg, Rng& rng)
    : groups_(cfg.gwc_groups), k_(cfg.k) {
    compress_ = make_conv2d(store, "costvol.compress", cfg.feat_channels, cfg.cat_channels, 1, 1, rng);
}

RawCorrelationVolume CostVolumeBuilder::build(const FeatureMap& fl, const FeatureMap& fr) const {
    if (fl.side != Side::left || fr.side != Side::right) throw StateError("cost volume needs (left, right) features");
    if (fl.values.shape() != fr.values.shape())
        throw ShapeError("feature shapes differ: " + shape_str(fl.values.shape()) + " vs " +
                         shape_str(fr.values.shape()));
    const std::array<Var, 2> parts{gwc_volume(fl.values, fr.values, groups_, k_),
                                   cat_volume(compress(fl.values), compress(fr.values), k_)};
    return {concat_channels(parts)};
}

MFM_NAMESPACE_END
