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

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "mfm/assembly.hpp"
#include "mfm/data.hpp"
#include "mfm/errors.hpp"
#include "mfm/regression.hpp"
#include "reference.hpp"

using namespace mfm;
using mfm_test::random_tensor;
using mfm_test::uniform_int;

namespace {

FullCostVolume column(const std::vector<real>& p) {
    return {Tensor({1, static_cast<std::int64_t>(p.size()), 1, 1}, p), true};
}

// A concave parabola through d-1, d, d+1 with vertex at d + delta; every other entry lies below the triple.
FullCostVolume parabola_volume(int levels, int peak, double delta, double curvature, std::mt19937_64& gen) {
    std::vector<double> p(static_cast<std::size_t>(levels));
    auto f = [&](int d) { return 1.0 - curvature * (d - peak - delta) * (d - peak - delta); };
    const double floor = std::min(f(peak - 1), f(peak + 1));
    std::uniform_real_distribution<double> low(0.0, 0.9 * floor);
    double sum = 0;
    for (int d = 0; d < levels; ++d) {
        p[static_cast<std::size_t>(d)] = std::abs(d - peak) <= 1 ? f(d) : low(gen);
        sum += p[static_cast<std::size_t>(d)];
    }
    std::vector<real> out;
    for (double v : p) out.push_back(static_cast<real>(v / sum));
    return column(out);
}

}  // namespace

TEST_CASE("soft_argmax: closed-form expectations") {
    std::vector<real> one_hot(12, 0);
    one_hot[7] = 1;
    CHECK(soft_argmax(column(one_hot)).values[0] == doctest::Approx(7.0));
    CHECK(soft_argmax(column(std::vector<real>(8, real(0.125)))).values[0] == doctest::Approx(3.5));
    CHECK(soft_argmax(column({0.25, 0.75})).values[0] == doctest::Approx(0.75));
    FullCostVolume raw = column({0.25, 0.75});
    raw.normalized = false;
    CHECK_THROWS_AS(soft_argmax(raw), StateError);
}

TEST_CASE("soft_argmax: oracle match, range and gradient") {
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 20; ++trial) {
        const FullCostVolume v =
            normalize(FullCostVolume{random_tensor({2, uniform_int(gen, 2, 12), 3, 4}, gen, -6, 6), false});
        const DisparityMap d = soft_argmax(v);
        CHECK(d.values.shape() == Shape{2, 3, 4});
        CHECK(max_abs_diff(d.values, reference::soft_argmax(v.scores)) <= 1e-5);
        for (real x : d.values.values()) {
            CHECK(x >= 0);
            CHECK(x <= v.scores.dim(1) - 1);
        }
    }
    const Var p(Tensor({1, 3, 1, 1}, std::vector<real>{0.2f, 0.3f, 0.5f}), true);
    Var s = sum_all(soft_argmax(p));
    s.backward();
    CHECK(p.grad()[2] == real(2));
}

TEST_CASE("parabolic_subpixel: worked examples") {
    std::vector<real> sym(10, 0.01f), skew(10, 0.01f), edge(10, 0.01f);
    sym[4] = 0.5f, sym[5] = 1.0f, sym[6] = 0.5f;
    skew[4] = 0.4f, skew[5] = 1.0f, skew[6] = 0.8f;
    edge[0] = 1.0f, edge[1] = 0.2f;
    CHECK(parabolic_subpixel(column(sym)).values[0] == doctest::Approx(5.0));
    CHECK(parabolic_subpixel(column(skew)).values[0] == doctest::Approx(5.25).epsilon(1e-6));
    CHECK(parabolic_subpixel(column(edge)).values[0] == real(0));
    std::vector<real> last(10, 0.01f);
    last[9] = 1.0f;
    CHECK(parabolic_subpixel(column(last)).values[0] == real(9));
    CHECK(parabolic_offset(0.4, 1.0, 0.8) == doctest::Approx(0.25));
    CHECK(parabolic_offset(0.5, 0.5, 0.5) == 0.0);
    CHECK(parabolic_offset(0.0, 1.0, 1.0) == 0.5);
    CHECK(parabolic_offset(1.0, 1.0, 0.0) == -0.5);
}

TEST_CASE("parabolic_subpixel: preconditions") {
    FullCostVolume v = column({0.2f, 0.3f, 0.5f});
    v.normalized = false;
    CHECK_THROWS_AS(parabolic_subpixel(v), StateError);
    CHECK_THROWS_AS(parabolic_subpixel(column({0.4f, 0.6f})), RangeError);
}

TEST_CASE("property: parabola vertices are recovered exactly") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> off(-0.49, 0.49), curv(0.1, 0.4);
    for (int trial = 0; trial < 300; ++trial) {
        const int levels = uniform_int(gen, 3, 16);
        const int peak = uniform_int(gen, 1, levels - 2);
        const double delta = off(gen);
        const FullCostVolume v = parabola_volume(levels, peak, delta, curv(gen), gen);
        CHECK(std::abs(parabolic_subpixel(v).values[0] - (peak + delta)) <= 1e-6);
    }
}

TEST_CASE("property: range, argmax consistency and oracle match") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int levels = uniform_int(gen, 3, 12);
        const FullCostVolume v =
            normalize(FullCostVolume{random_tensor({2, levels, 4, 5}, gen, -4, 4), false});
        const Tensor d = parabolic_subpixel(v).values;
        const Tensor a = argmax_disparity(v);
        CHECK(max_abs_diff(d, reference::parabolic(v.scores)) <= 1e-6);
        for (std::int64_t i = 0; i < d.numel(); ++i) {
            CHECK(d[i] >= 0);
            CHECK(d[i] <= levels - 1);
            CHECK(std::abs(d[i] - a[i]) <= 0.5 + 1e-6);
        }
    }
}

TEST_CASE("argmax_disparity prefers the first maximum") {
    CHECK(argmax_disparity(column({0.1f, 0.4f, 0.4f, 0.1f}))[0] == real(1));
}

TEST_CASE("write_disparity chooses the format from the extension") {
    mfm_test::TempDir dir("disp");
    Tensor values({1, 2, 2}, std::vector<real>{1.5f, 2.25f, 3.0f, 50.0f});
    ValidMask mask = ValidMask::all({1, 2, 2});
    mask.flags[1] = 0;
    write_disparity(dir / "d.png", DisparityMap{values}, mask);
    const auto [png, png_mask] = read_disparity_png16(dir / "d.png");
    CHECK(png.values[0] == real(1.5));
    CHECK_FALSE(png_mask[1]);
    CHECK(png.values[3] == real(50));
    write_disparity(dir / "d.pfm", DisparityMap{values}, mask);
    const PfmImage pfm = read_pfm(dir / "d.pfm");
    CHECK(pfm.values[0] == real(1.5));
    CHECK(std::isinf(pfm.values[1]));
    CHECK_THROWS_AS(write_disparity(dir / "e.pfm", DisparityMap{values}, ValidMask::all({1, 2})), ShapeError);
}
