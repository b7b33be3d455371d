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

#include <array>
#include <random>

#include "helpers.hpp"
#include "mfm/costvol.hpp"
#include "mfm/errors.hpp"
#include "reference.hpp"

using namespace mfm;
using mfm_test::random_tensor;

namespace {

// Channel range [begin, end) of a [B,C,...] tensor.
Tensor channels(const Tensor& t, std::int64_t begin, std::int64_t end) {
    return slice_channels(Var(t), begin, end).value();
}

// Shifts a [B,C,h,w] map right by t columns, filling the new left columns from `fill`.
Tensor shift_right(const Tensor& x, int t, const Tensor& fill) {
    Tensor out = fill;
    const auto b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    for (std::int64_t i = 0; i < b * c * h; ++i)
        for (std::int64_t col = t; col < w; ++col) out[i * w + col] = x[i * w + col - t];
    return out;
}

}  // namespace

TEST_CASE("gwc_volume: hand-evaluated group mean") {
    const Var fl(Tensor({1, 2, 1, 1}, std::vector<real>{1, 2}));
    const Var fr(Tensor({1, 2, 1, 1}, std::vector<real>{3, 4}));
    const Var v = gwc_volume(fl, fr, 1, 1);
    CHECK(v.shape() == Shape{1, 1, 1, 1, 1});
    CHECK(v.value()[0] == real(5.5));
}

TEST_CASE("gwc_volume: equal maps at j=0 give per-group mean of squares") {
    std::mt19937_64 gen(1);
    const Tensor f = random_tensor({2, 8, 3, 5}, gen);
    const Tensor v = gwc_volume(Var(f), Var(f), 4, 3).value();
    for (int b = 0; b < 2; ++b)
        for (int g = 0; g < 4; ++g)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 5; ++x) {
                    double acc = 0;
                    for (int c = 2 * g; c < 2 * g + 2; ++c) acc += f.at({b, c, y, x}) * f.at({b, c, y, x});
                    CHECK(v.at({b, g, 0, y, x}) == doctest::Approx(acc / 2).epsilon(1e-6));
                }
}

TEST_CASE("property: gwc and cat match the loop oracles") {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 30; ++trial) {
        const int groups = mfm_test::uniform_int(gen, 1, 4);
        const int c = groups * mfm_test::uniform_int(gen, 1, 3);
        const int k = mfm_test::uniform_int(gen, 1, 6);
        const Shape s{mfm_test::uniform_int(gen, 1, 2), c, mfm_test::uniform_int(gen, 1, 5),
                      mfm_test::uniform_int(gen, 1, 9)};
        const Tensor fl = random_tensor(s, gen), fr = random_tensor(s, gen);
        CHECK(max_abs_diff(gwc_volume(Var(fl), Var(fr), groups, k).value(), reference::gwc(fl, fr, groups, k)) <=
              1e-6);
        CHECK(max_abs_diff(cat_volume(Var(fl), Var(fr), k).value(), reference::cat(fl, fr, k)) == 0);
    }
}

TEST_CASE("property: zero fill for x < j") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = mfm_test::uniform_int(gen, 2, 8);
        const Shape s{1, 4, 2, mfm_test::uniform_int(gen, 1, 10)};
        const Tensor fl = random_tensor(s, gen), fr = random_tensor(s, gen);
        const Tensor g = gwc_volume(Var(fl), Var(fr), 2, k).value();
        const Tensor c = cat_volume(Var(fl), Var(fr), k).value();
        for (int j = 0; j < k; ++j)
            for (int y = 0; y < 2; ++y)
                for (std::int64_t x = 0; x < std::min<std::int64_t>(j, s[3]); ++x) {
                    for (int grp = 0; grp < 2; ++grp) CHECK(g.at({0, grp, j, y, x}) == 0);
                    for (int ch = 4; ch < 8; ++ch) CHECK(c.at({0, ch, j, y, x}) == 0);
                }
    }
}

TEST_CASE("property: shift covariance at the k level") {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = mfm_test::uniform_int(gen, 1, 5);
        const int t = mfm_test::uniform_int(gen, 1, 4);
        const Shape s{1, 6, 3, 12};
        const Tensor fl = random_tensor(s, gen), fr = random_tensor(s, gen);
        const Tensor sl = shift_right(fl, t, random_tensor(s, gen)), sr = shift_right(fr, t, random_tensor(s, gen));
        const Tensor a = gwc_volume(Var(fl), Var(fr), 3, k).value();
        const Tensor b = gwc_volume(Var(sl), Var(sr), 3, k).value();
        const Tensor ca = cat_volume(Var(fl), Var(fr), k).value();
        const Tensor cb = cat_volume(Var(sl), Var(sr), k).value();
        for (int j = 0; j < k; ++j)
            for (int y = 0; y < 3; ++y)
                for (int x = j; x + t < 12; ++x) {
                    for (int g = 0; g < 3; ++g) CHECK(b.at({0, g, j, y, x + t}) == a.at({0, g, j, y, x}));
                    for (int ch = 0; ch < 12; ++ch) CHECK(cb.at({0, ch, j, y, x + t}) == ca.at({0, ch, j, y, x}));
                }
    }
}

TEST_CASE("cat_volume: identity alignment and zero fill") {
    std::mt19937_64 gen(5);
    const Tensor f = random_tensor({1, 3, 2, 4}, gen);
    const Tensor c = cat_volume(Var(f), Var(f), 3).value();
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 4; ++x) CHECK(c.at({0, ch, 0, y, x}) == c.at({0, ch + 3, 0, y, x}));
            for (int j = 1; j < 3; ++j) CHECK(c.at({0, ch + 3, j, y, 0}) == 0);
        }
}

TEST_CASE("volume gradients match their bilinear forms") {
    std::mt19937_64 gen(6);
    const Shape s{2, 4, 3, 6};
    const Var fl(random_tensor(s, gen), true), fr(random_tensor(s, gen), true);
    const Tensor w = random_tensor({2, 2, 4, 3, 6}, gen);
    mfm_test::dot(gwc_volume(fl, fr, 2, 4), w).backward();
    // d/dfl(b,c,y,x) = sum_j w(b,g,j,y,x) fr(b,c,y,x-j) / (C/G), and symmetrically for fr.
    Tensor gl(s), gr(s);
    for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 4; ++c)
            for (int j = 0; j < 4; ++j)
                for (int y = 0; y < 3; ++y)
                    for (int x = j; x < 6; ++x) {
                        const real ww = w.at({b, c / 2, j, y, x}) / 2;
                        gl.at({b, c, y, x}) += ww * fr.value().at({b, c, y, x - j});
                        gr.at({b, c, y, x - j}) += ww * fl.value().at({b, c, y, x});
                    }
    CHECK(max_abs_diff(fl.grad(), gl) <= 1e-5);
    CHECK(max_abs_diff(fr.grad(), gr) <= 1e-5);

    const Var cl(random_tensor(s, gen), true), cr(random_tensor(s, gen), true);
    const Tensor wc = random_tensor({2, 8, 4, 3, 6}, gen);
    mfm_test::dot(cat_volume(cl, cr, 4), wc).backward();
    Tensor el(s), er(s);
    for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 4; ++c)
            for (int j = 0; j < 4; ++j)
                for (int y = 0; y < 3; ++y)
                    for (int x = 0; x < 6; ++x) {
                        el.at({b, c, y, x}) += wc.at({b, c, j, y, x});
                        if (x >= j) er.at({b, c, y, x - j}) += wc.at({b, c + 4, j, y, x});
                    }
    CHECK(max_abs_diff(cl.grad(), el) <= 1e-5);
    CHECK(max_abs_diff(cr.grad(), er) <= 1e-5);
}

TEST_CASE("build_raw_volume: channel layout and oracle composition") {
    Config cfg = preset("desk");
    ParameterStore store;
    Rng rng(7);
    CostVolumeBuilder builder(store, cfg, rng);
    REQUIRE(cfg.raw_channels() == 32);
    std::mt19937_64 gen(8);
    const Tensor l = random_tensor({1, 32, 4, 8}, gen), r = random_tensor({1, 32, 4, 8}, gen);
    const RawCorrelationVolume raw = builder.build({Var(l), Side::left}, {Var(r), Side::right});
    CHECK(raw.values.shape() == Shape{1, 32, 4, 4, 8});
    CHECK(channels(raw.values.value(), 0, 8) == gwc_volume(Var(l), Var(r), 8, 4).value());
    const Tensor oracle_cat =
        reference::cat(builder.compress(Var(l)).value(), builder.compress(Var(r)).value(), 4);
    CHECK(max_abs_diff(channels(raw.values.value(), 8, 32), oracle_cat) == 0);
    CHECK(max_abs_diff(channels(raw.values.value(), 0, 8), reference::gwc(l, r, 8, 4)) <= 1e-6);

    CHECK_THROWS_AS(builder.build({Var(l), Side::right}, {Var(r), Side::left}), StateError);
    CHECK_THROWS_AS(builder.build({Var(l), Side::left}, {Var(Tensor({1, 32, 4, 4})), Side::right}), ShapeError);
    CHECK_THROWS_AS((void)gwc_volume(Var(l), Var(r), 5, 4), Error);
}
