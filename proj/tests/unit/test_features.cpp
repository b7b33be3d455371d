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

#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mfm/errors.hpp"
#include "mfm/features.hpp"

using namespace mfm;

namespace {

Config desk() { return preset("desk"); }

}  // namespace

TEST_CASE("extract: 3x64x96 with n=4 gives two 32x16x24 maps") {
    Config cfg = desk();
    ParameterStore store;
    Rng rng(1);
    FeatureExtractor fx(store, cfg, rng);
    std::mt19937_64 gen(2);
    ImagePair p{mfm_test::random_tensor({1, 3, 64, 96}, gen, 0, 1), mfm_test::random_tensor({1, 3, 64, 96}, gen, 0, 1)};
    const auto [l, r] = fx.extract(p);
    CHECK(l.values.shape() == Shape{1, 32, 16, 24});
    CHECK(r.values.shape() == Shape{1, 32, 16, 24});
    CHECK(l.side == Side::left);
    CHECK(r.side == Side::right);
}

TEST_CASE("weight sharing: equal images give equal features, swapping inputs swaps outputs") {
    Config cfg = preset("tiny");
    ParameterStore store;
    Rng rng(3);
    FeatureExtractor fx(store, cfg, rng);
    std::mt19937_64 gen(4);
    const Tensor a = mfm_test::random_tensor({2, 3, 16, 24}, gen, 0, 1);
    const Tensor b = mfm_test::random_tensor({2, 3, 16, 24}, gen, 0, 1);
    const auto [l1, r1] = fx.extract({a, a});
    CHECK(l1.values.value() == r1.values.value());
    const auto [l2, r2] = fx.extract({a, b});
    const auto [l3, r3] = fx.extract({b, a});
    CHECK(l2.values.value() == r3.values.value());
    CHECK(r2.values.value() == l3.values.value());
}

TEST_CASE("determinism: same seed gives identical parameters and bitwise-identical output") {
    Config cfg = preset("tiny");
    ParameterStore s1, s2;
    Rng r1(9), r2(9);
    FeatureExtractor f1(s1, cfg, r1), f2(s2, cfg, r2);
    REQUIRE(s1.entries().size() == s2.entries().size());
    for (std::size_t i = 0; i < s1.entries().size(); ++i) {
        CHECK(s1.entries()[i].name == s2.entries()[i].name);
        CHECK(s1.entries()[i].var.value() == s2.entries()[i].var.value());
    }
    std::mt19937_64 gen(5);
    const Tensor img = mfm_test::random_tensor({1, 3, 8, 12}, gen, 0, 1);
    CHECK(f1(Var(img)).value() == f2(Var(img)).value());
    CHECK(f1(Var(img)).value() == f1(Var(img)).value());
}

TEST_CASE("every parameter belongs to the features module") {
    Config cfg = desk();
    cfg.res_blocks = 2;
    ParameterStore store;
    Rng rng(0);
    FeatureExtractor fx(store, cfg, rng);
    // Two stride-2 stages of (down + 2 blocks x 2 convs) plus the projection, weight and bias each.
    CHECK(store.entries().size() == 2 * (2 * (1 + 2 * 2) + 1));
    for (const auto& e : store.entries()) CHECK(e.name.rfind("features.", 0) == 0);
}

TEST_CASE("scale is 1/n for every power of two") {
    for (int n : {2, 4, 8}) {
        Config cfg = desk();
        cfg.n = n;
        cfg.d_max = 8 * n;
        cfg.k = 8;
        ParameterStore store;
        Rng rng(0);
        FeatureExtractor fx(store, cfg, rng);
        const Var out = fx(Var(Tensor({1, 3, 2 * 8, 3 * 8})));
        CHECK(out.shape() == Shape{1, 32, 16 / n, 24 / n});
    }
}

TEST_CASE("extract errors") {
    Config cfg = desk();
    ParameterStore store;
    Rng rng(0);
    FeatureExtractor fx(store, cfg, rng);
    CHECK_THROWS_AS(fx.extract({Tensor({1, 3, 30, 32}), Tensor({1, 3, 30, 32})}), ShapeError);
    CHECK_THROWS_AS(fx.extract({Tensor({1, 3, 32, 32}), Tensor({1, 3, 32, 36})}), ShapeError);
    CHECK_THROWS_AS((void)fx(Var(Tensor({1, 1, 32, 32}))), ShapeError);

    Config odd = parse_config("D_max = 12\nn = 3\n");
    ParameterStore s2;
    CHECK_THROWS_AS(FeatureExtractor(s2, odd, rng), RangeError);
}

TEST_CASE("every extractor parameter receives gradient") {
    Config cfg = preset("tiny");
    ParameterStore store;
    Rng rng(6);
    FeatureExtractor fx(store, cfg, rng);
    std::mt19937_64 gen(7);
    const Var out = fx(Var(mfm_test::random_tensor({1, 3, 16, 16}, gen, 0, 1)));
    Var loss = mfm_test::dot(out, mfm_test::random_tensor(out.shape(), gen));
    loss.backward();
    for (const auto& e : store.entries()) CHECK_MESSAGE(mfm_test::max_abs(e.var.grad()) > 0, e.name);
}
