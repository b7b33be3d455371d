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

#include "mfm/features.hpp"

#include <string>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

FeatureExtractor::FeatureExtractor(ParameterStore& store, const Config& cfg, Rng& rng) : n_(cfg.n) {
    if (cfg.n < 2 || (cfg.n & (cfg.n - 1)) != 0)
        throw RangeError("feature extractor needs n to be a power of two, got " + std::to_string(cfg.n));
    const int width = cfg.stem_channels;
    int in = 3;
    for (int factor = 2, s = 0; factor <= cfg.n; factor *= 2, ++s) {
        const std::string prefix = "features.stage" + std::to_string(s);
        Stage stage;
        stage.down = make_conv2d(store, prefix + ".down", in, width, 3, 2, rng);
        for (int b = 0; b < cfg.res_blocks; ++b) {
            const std::string name = prefix + ".block" + std::to_string(b);
            stage.blocks.push_back({make_conv2d(store, name + ".a", width, width, 3, 1, rng),
                                    make_conv2d(store, name + ".b", width, width, 3, 1, rng)});
        }
        stages_.push_back(std::move(stage));
        in = width;
    }
    project_ = make_conv2d(store, "features.project", width, cfg.feat_channels, 3, 1, rng);
}

Var FeatureExtractor::operator()(const Var& images) const {
    const Shape& s = images.shape();
    if (s.size() != 4 || s[1] != 3) throw ShapeError("feature extractor expects [B,3,H,W], got " + shape_str(s));
    if (s[2] % n_ != 0 || s[3] % n_ != 0)
        throw ShapeError("image size " + std::to_string(s[2]) + "x" + std::to_string(s[3]) +
                         " is not divisible by n=" + std::to_string(n_));
    Var x = images;
    for (const Stage& stage : stages_) {
        x = activate(stage.down(x));
        for (const ResBlock& block : stage.blocks) x = activate(add(x, block.b(activate(block.a(x)))));
    }
    return project_(x);
}

std::pair<FeatureMap, FeatureMap> FeatureExtractor::extract(const ImagePair& pair) const {
    if (pair.left.shape() != pair.right.shape())
        throw ShapeError("left " + shape_str(pair.left.shape()) + " and right " + shape_str(pair.right.shape()) +
                         " images differ in shape");
    return {FeatureMap{(*this)(Var(pair.left)), Side::left}, FeatureMap{(*this)(Var(pair.right)), Side::right}};
}

MFM_NAMESPACE_END
