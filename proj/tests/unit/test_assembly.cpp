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
#include <fstream>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "mfm/assembly.hpp"
#include "mfm/errors.hpp"
#include "mfm/supervision.hpp"
#include "reference.hpp"

using namespace mfm;
using mfm_test::random_tensor;
using mfm_test::uniform_int;

namespace {

std::vector<Tensor> random_stages(int n, const Shape& s, std::mt19937_64& gen, double scale = 3.0) {
    std::vector<Tensor> out;
    for (int i = 0; i < n; ++i) out.push_back(random_tensor(s, gen, -scale, scale));
    return out;
}

// Softmax over the union of every stage's k entries at each pixel, returned per stage.
std::vector<Tensor> joint_softmax(const std::vector<Tensor>& stages) {
    std::vector<Tensor> out = stages;
    const Shape& s = stages[0].shape();
    const std::int64_t plane = s[2] * s[3];
    for (std::int64_t b = 0; b < s[0]; ++b)
        for (std::int64_t p = 0; p < plane; ++p) {
            double mx = -std::numeric_limits<double>::infinity(), sum = 0;
            for (const auto& t : stages)
                for (std::int64_t m = 0; m < s[1]; ++m) mx = std::max<double>(mx, t[(b * s[1] + m) * plane + p]);
            for (const auto& t : stages)
                for (std::int64_t m = 0; m < s[1]; ++m) sum += std::exp(t[(b * s[1] + m) * plane + p] - mx);
            for (std::size_t i = 0; i < stages.size(); ++i)
                for (std::int64_t m = 0; m < s[1]; ++m) {
                    const auto at = (b * s[1] + m) * plane + p;
                    out[i][at] = static_cast<real>(std::exp(stages[i][at] - mx) / sum);
                }
        }
    return out;
}

}  // namespace

TEST_CASE("upsample_stage: constants, closed form and errors") {
    const Var c(Tensor({1, 2, 3, 4}, real(0.75)));
    const Tensor up = upsample_stage(c, 12, 16).value();
    CHECK(up.shape() == Shape{1, 2, 12, 16});
    for (real v : up.values()) CHECK(v == doctest::Approx(0.75).epsilon(1e-7));

    const Var ramp(Tensor({1, 1, 2, 2}, std::vector<real>{0, 1, 0, 1}));
    const Tensor r = upsample_stage(ramp, 4, 4).value();
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) CHECK(r.at({0, 0, y, x}) == doctest::Approx(x / 3.0).epsilon(1e-7));

    CHECK_THROWS_AS((void)upsample_stage(c, 12, 12), ShapeError);
    CHECK_THROWS_AS((void)upsample_stage(c, 10, 16), ShapeError);
    CHECK_THROWS_AS((void)upsample_stage(Var(Tensor({2, 3, 4})), 4, 8), ShapeError);
}

TEST_CASE("property: upsampling then nearest downsampling recovers grid values") {
    std::mt19937_64 gen(1);
    // (h, n) pairs with (n*h - 1) divisible by (h - 1), so every low-res row lands on a full-res row.
    const std::vector<std::pair<int, int>> aligned{{2, 2}, {2, 4}, {2, 3}, {3, 3}, {4, 4}, {3, 5}, {1, 4}};
    for (const auto& [h, n] : aligned)
        for (const auto& [w, nw] : aligned) {
            if (nw != n) continue;
            const Tensor p = random_tensor({2, 3, h, w}, gen);
            const Tensor up = upsample_stage(Var(p), h * n, w * n).value();
            CHECK(max_abs_diff(up, reference::bilinear(p, h * n, w * n)) <= 1e-6);
            for (int c = 0; c < 3; ++c) {
                Tensor slice({2, h * n, w * n});
                for (int b = 0; b < 2; ++b)
                    for (int y = 0; y < h * n; ++y)
                        for (int x = 0; x < w * n; ++x) slice.at({b, y, x}) = up.at({b, c, y, x});
                const auto [low, mask] = downsample_nearest(DisparityMap{slice}, ValidMask::all(slice.shape()), n);
                for (int b = 0; b < 2; ++b)
                    for (int y = 0; y < h; ++y)
                        for (int x = 0; x < w; ++x)
                            CHECK(std::abs(low.values.at({b, y, x}) - p.at({b, c, y, x})) <= 1e-6);
            }
        }
}

TEST_CASE("interleave: closed-form layout, degenerate n=1 and arity") {
    const Shape s{1, 2, 1, 1};
    const std::vector<Tensor> st{Tensor(s, std::vector<real>{10, 11}), Tensor(s, std::vector<real>{20, 21}),
                                 Tensor(s, std::vector<real>{30, 31})};
    const FullCostVolume v = interleave(st, 3);
    CHECK_FALSE(v.normalized);
    CHECK(v.scores.values().size() == 6);
    CHECK(std::vector<real>(v.scores.values().begin(), v.scores.values().end()) ==
          std::vector<real>{10, 20, 30, 11, 21, 31});
    CHECK(interleave(std::span(st).first(1), 1).scores == st[0]);
    CHECK_THROWS_AS(interleave(st, 2), ArityError);
    const std::vector<Var> vars{Var(st[0]), Var(st[1])};
    CHECK_THROWS_AS((void)interleave(vars, 3), ArityError);
}

TEST_CASE("property: coverage bijection and round trip") {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = uniform_int(gen, 1, 5), k = uniform_int(gen, 1, 6);
        const Shape s{uniform_int(gen, 1, 2), k, uniform_int(gen, 1, 4), uniform_int(gen, 1, 4)};
        const auto st = random_stages(n, s, gen);
        const FullCostVolume v = interleave(st, n);
        CHECK(deinterleave(v, n) == st);
        for (int d = 0; d < n * k; ++d)
            CHECK(v.scores.at({0, d, 0, 0}) == st[static_cast<std::size_t>(d % n)].at({0, d / n, 0, 0}));
    }
}

TEST_CASE("property: normalization commutes with interleaving") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = uniform_int(gen, 1, 4), k = uniform_int(gen, 1, 6);
        const Shape s{uniform_int(gen, 1, 2), k, uniform_int(gen, 1, 4), uniform_int(gen, 1, 4)};
        const auto st = random_stages(n, s, gen, 8.0);
        const FullCostVolume a = normalize(interleave(st, n));
        const FullCostVolume b = interleave(joint_softmax(st), n);
        CHECK(a.normalized);
        CHECK(max_abs_diff(a.scores, b.scores) <= 1e-6);
    }
}

TEST_CASE("normalize: closed forms, shift invariance and errors") {
    FullCostVolume flat{Tensor({1, 8, 2, 2}, real(-3)), false};
    const FullCostVolume uniform = normalize(flat);
    for (real p : uniform.scores.values()) CHECK(p == doctest::Approx(1.0 / 8));

    FullCostVolume two{Tensor({1, 2, 1, 1}, std::vector<real>{0, static_cast<real>(std::log(3.0))}), false};
    const Tensor p = normalize(two).scores;
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-6));

    std::mt19937_64 gen(4);
    FullCostVolume v{random_tensor({2, 6, 3, 3}, gen, -5, 5), false};
    FullCostVolume shifted = v;
    for (std::int64_t b = 0; b < 2; ++b)
        for (std::int64_t px = 0; px < 9; ++px) {
            const real c = static_cast<real>(uniform_int(gen, -10, 10));
            for (std::int64_t d = 0; d < 6; ++d) shifted.scores[(b * 6 + d) * 9 + px] += c;
        }
    const Tensor pv = normalize(v).scores;
    CHECK(max_abs_diff(pv, normalize(shifted).scores) <= 1e-6);
    for (std::int64_t b = 0; b < 2; ++b)
        for (std::int64_t px = 0; px < 9; ++px) {
            double sum = 0;
            for (std::int64_t d = 0; d < 6; ++d) sum += pv[(b * 6 + d) * 9 + px];
            CHECK(std::abs(sum - 1) <= 1e-5);
        }

    v.scores[5] = std::numeric_limits<real>::quiet_NaN();
    CHECK_THROWS_AS(normalize(v), NumericError);
    v.scores[5] = std::numeric_limits<real>::infinity();
    CHECK_THROWS_AS((void)normalize(Var(v.scores)), NumericError);
}

TEST_CASE("disparity_lerp places level j at d = n*j") {
    const Var p(Tensor({1, 3, 1, 1}, std::vector<real>{0, 4, 2}));
    const Tensor full = disparity_lerp(p, 2, 6).value();
    CHECK(std::vector<real>(full.values().begin(), full.values().end()) == std::vector<real>{0, 2, 4, 3, 2, 2});
}

TEST_CASE("assembly ops backpropagate") {
    std::mt19937_64 gen(5);
    std::vector<Var> st;
    for (int i = 0; i < 2; ++i) st.emplace_back(random_tensor({1, 3, 2, 2}, gen), true);
    const Var up0 = upsample_stage(st[0], 4, 4), up1 = upsample_stage(st[1], 4, 4);
    const std::vector<Var> ups{up0, up1};
    const Var full = normalize(interleave(ups, 2));
    mfm_test::dot(full, random_tensor(full.shape(), gen)).backward();
    CHECK(mfm_test::max_abs(st[0].grad()) > 0);
    CHECK(mfm_test::max_abs(st[1].grad()) > 0);
}

TEST_CASE("cost volume container round trip and format errors") {
    mfm_test::TempDir dir("vol");
    std::mt19937_64 gen(6);
    const FullCostVolume v = normalize(FullCostVolume{random_tensor({1, 8, 3, 5}, gen), false});
    write_cost_volume(dir / "v.bin", v);
    const FullCostVolume back = read_cost_volume(dir / "v.bin");
    CHECK(back.normalized);
    CHECK(back.scores == v.scores);

    std::ifstream in(dir / "v.bin", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(bytes.substr(0, 4) == "MFMV");
    CHECK(bytes.size() == 4 + 4 + 4 + 4 + 4 * 8 + 1 + 4 * 120);
    std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    CHECK_THROWS_AS(read_cost_volume(dir / "short.bin"), FormatError);
    std::ofstream(dir / "bad.bin", std::ios::binary) << "XXXX" << bytes.substr(4);
    CHECK_THROWS_AS(read_cost_volume(dir / "bad.bin"), FormatError);
    CHECK_THROWS_AS(read_cost_volume(dir / "missing.bin"), IOError);
}
