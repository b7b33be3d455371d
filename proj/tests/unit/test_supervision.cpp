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
#include <limits>
#include <random>

#include "helpers.hpp"
#include "mfm/errors.hpp"
#include "mfm/supervision.hpp"
#include "reference.hpp"

using namespace mfm;
using mfm_test::random_tensor;
using mfm_test::uniform_int;

namespace {

Config grid(int n, int k) {
    Config c = preset("tiny");
    c.n = n;
    c.k = k;
    c.d_max = n * k;
    return validate_config(c);
}

std::vector<StageLabelVolume> labels_for(const std::vector<real>& d, const Config& cfg) {
    const auto count = static_cast<std::int64_t>(d.size());
    return stage_labels(DisparityMap{Tensor({1, 1, count}, d), Resolution::low}, ValidMask::all({1, 1, count}), cfg);
}

// Per-stage normalized labels as scores: log of the label distribution.
std::vector<Var> log_label_scores(const std::vector<StageLabelVolume>& labels) {
    std::vector<Var> out;
    for (const auto& l : labels) {
        Tensor t = l.values;
        for (auto& v : t.values()) v = std::log(v);
        out.emplace_back(t, true);
    }
    return out;
}

double label_entropy(const std::vector<StageLabelVolume>& labels, const ValidMask& mask) {
    double h = 0;
    for (const auto& l : labels) {
        const std::int64_t k = l.values.dim(1), plane = l.values.dim(2) * l.values.dim(3);
        for (std::int64_t p = 0; p < plane; ++p) {
            if (!mask[p]) continue;
            double total = 0;
            for (std::int64_t m = 0; m < k; ++m) total += l.values[m * plane + p];
            for (std::int64_t m = 0; m < k; ++m) {
                const double q = l.values[m * plane + p] / total;
                if (q > 0) h -= q * std::log(q);
            }
        }
    }
    return h / static_cast<double>(mask.count());
}

}  // namespace

TEST_CASE("stage_labels: direct evaluation") {
    const auto labels = labels_for({10.0f}, grid(4, 4));
    REQUIRE(labels.size() == 4);
    CHECK(labels[2].stage == 2);
    CHECK(labels[2].values.at({0, 2, 0, 0}) == real(1));
    CHECK(labels[1].values.at({0, 2, 0, 0}) == doctest::Approx(0.36788).epsilon(1e-5));
    CHECK_THROWS_AS(labels_for({16.0f}, grid(4, 4)), RangeError);
    CHECK_THROWS_AS(labels_for({-0.5f}, grid(4, 4)), RangeError);
}

TEST_CASE("stage_labels: masked pixels are skipped and filled") {
    DisparityMap gt{Tensor({1, 1, 2}, std::vector<real>{3.0f, 99.0f}), Resolution::low};
    ValidMask mask = ValidMask::all({1, 1, 2});
    mask.flags[1] = 0;
    const auto labels = stage_labels(gt, mask, grid(2, 4));
    for (const auto& l : labels)
        for (int m = 0; m < 4; ++m) CHECK(l.values.at({0, m, 0, 1}) == real(1));
}

TEST_CASE("property: label peak alignment and cross-stage closeness") {
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = uniform_int(gen, 2, 6), k = uniform_int(gen, 1, 10);
        const Config cfg = grid(n, k);
        const double d = std::uniform_real_distribution<double>(0.0, n * k)(gen);
        const auto labels = labels_for({static_cast<real>(d)}, cfg);
        const auto oracle = reference::stage_label_grid(static_cast<real>(d), n, k);

        int best = -1;
        double best_v = -1;
        std::vector<int> cell(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            double stage_v = -1;
            for (int m = 0; m < k; ++m) {
                const double v = labels[static_cast<std::size_t>(i)].values.at({0, m, 0, 0});
                CHECK(std::abs(v - oracle[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)]) <= 1e-6);
                CHECK(v <= 1.0);
                if (v > stage_v) stage_v = v, cell[static_cast<std::size_t>(i)] = m;
                if (v > best_v || (v == best_v && m * n + i < best)) best_v = v, best = m * n + i;
            }
        }
        // Nearest integer candidate, ties toward the smaller disparity.
        const int nearest = std::min(static_cast<int>(std::ceil(static_cast<real>(d) - 0.5)), n * k - 1);
        CHECK(best == nearest);
        const auto [lo, hi] = std::minmax_element(cell.begin(), cell.end());
        CHECK(*hi - *lo <= 1);
    }
}

TEST_CASE("downsample_nearest keeps full-resolution units") {
    Tensor gt({1, 4, 4});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) gt.at({0, y, x}) = static_cast<real>(10 * y + x);
    ValidMask mask = ValidMask::all({1, 4, 4});
    mask.flags[15] = 0;
    const auto [low, low_mask] = downsample_nearest(DisparityMap{gt}, mask, 2);
    CHECK(low.resolution == Resolution::low);
    CHECK(low.values.shape() == Shape{1, 2, 2});
    CHECK(low.values.at({0, 0, 0}) == 0);
    CHECK(low.values.at({0, 1, 1}) == 33);
    CHECK(low.values.at({0, 0, 1}) == 3);
    CHECK_FALSE(low_mask[3]);
    CHECK(low_mask.count() == 3);
    CHECK_THROWS_AS(downsample_nearest(DisparityMap{gt}, mask, 3), ShapeError);
}

TEST_CASE("stage_loss: matched scores reach the entropy bound") {
    std::mt19937_64 gen(2);
    const Config cfg = grid(2, 3);
    std::vector<real> d;
    for (int i = 0; i < 6; ++i) d.push_back(static_cast<real>(std::uniform_real_distribution<double>(0, 5.9)(gen)));
    const auto labels = labels_for(d, cfg);
    const ValidMask mask = ValidMask::all({1, 1, 6});
    const auto scores = log_label_scores(labels);
    const double loss = stage_loss(scores, labels, mask).item();
    CHECK(loss == doctest::Approx(label_entropy(labels, mask)).epsilon(1e-5));

    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Var> other;
        for (const auto& l : labels) other.emplace_back(random_tensor(l.values.shape(), gen, -3, 3));
        CHECK(stage_loss(other, labels, mask).item() >= loss - 1e-6);
    }
}

TEST_CASE("stage_loss: sharpening the labelled peak strictly decreases the loss") {
    const Config cfg = grid(2, 4);
    const auto labels = labels_for({2.4f, 5.0f, 0.3f}, cfg);
    const ValidMask mask = ValidMask::all({1, 1, 3});
    std::mt19937_64 gen(3);
    std::vector<Tensor> base;
    for (const auto& l : labels) base.push_back(random_tensor(l.values.shape(), gen, -1, 1));
    double prev = std::numeric_limits<double>::infinity();
    for (double c : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        std::vector<Var> scores;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            Tensor t = base[i];
            for (std::int64_t p = 0; p < 3; ++p) {
                std::int64_t arg = 0;
                for (std::int64_t m = 1; m < 4; ++m)
                    if (labels[i].values[m * 3 + p] > labels[i].values[arg * 3 + p]) arg = m;
                t[arg * 3 + p] += static_cast<real>(c);
            }
            scores.emplace_back(t);
        }
        const double loss = stage_loss(scores, labels, mask).item();
        CHECK(loss < prev);
        prev = loss;
    }
}

TEST_CASE("stage_loss: masking and shape errors") {
    const Config cfg = grid(2, 3);
    const auto labels = labels_for({1.0f, 2.0f}, cfg);
    std::vector<Var> scores;
    for (const auto& l : labels) scores.emplace_back(Tensor(l.values.shape()), true);
    CHECK_THROWS_AS((void)stage_loss(scores, labels, ValidMask::all({1, 1, 2}, false)), MaskError);
    CHECK_THROWS_AS((void)stage_loss(std::span(scores).first(1), labels, ValidMask::all({1, 1, 2})), ShapeError);

    // A masked pixel contributes neither value nor gradient.
    ValidMask half = ValidMask::all({1, 1, 2});
    half.flags[1] = 0;
    Var loss = stage_loss(scores, labels, half);
    loss.backward();
    for (const auto& s : scores)
        for (int m = 0; m < 3; ++m) CHECK(s.grad().at({0, m, 0, 1}) == 0);
    CHECK(loss.item() == doctest::Approx(std::log(3.0) * 2));
}

TEST_CASE("l1_loss: examples and oracle") {
    const DisparityMap gt{Tensor({1, 1, 2}, std::vector<real>{4, 6})};
    const ValidMask mask = ValidMask::all({1, 1, 2});
    CHECK(l1_loss(gt, gt, mask) == 0);
    CHECK(l1_loss(DisparityMap{Tensor({1, 1, 2}, std::vector<real>{5, 3})}, gt, mask) == doctest::Approx(2.0));
    CHECK_THROWS_AS(l1_loss(gt, gt, ValidMask::all({1, 1, 2}, false)), MaskError);
    CHECK_THROWS_AS(l1_loss(DisparityMap{Tensor({1, 2, 1})}, gt, mask), ShapeError);

    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Shape s{2, uniform_int(gen, 1, 8), uniform_int(gen, 1, 8)};
        const Tensor p = random_tensor(s, gen, 0, 16), g = random_tensor(s, gen, 0, 16);
        const ValidMask m = mfm_test::random_mask(s, gen);
        CHECK(std::abs(l1_loss(DisparityMap{p}, DisparityMap{g}, m) - reference::epe(p, g, m)) <= 1e-6);
    }

    const Var pred(Tensor({1, 1, 2}, std::vector<real>{5, 3}), true);
    Var l = l1_loss(pred, gt, mask);
    l.backward();
    CHECK(pred.grad()[0] == real(0.5));
    CHECK(pred.grad()[1] == real(-0.5));
}

TEST_CASE("total_loss: sum, identity, gradient coverage and errors") {
    CHECK(total_loss(0.5, 0.2) == doctest::Approx(0.7));
    CHECK(total_loss(0.0, 1.25) == 1.25);
    CHECK_THROWS_AS(total_loss(std::nan(""), 1.0), NumericError);
    CHECK_THROWS_AS(total_loss(1.0, std::numeric_limits<double>::infinity()), NumericError);

    std::mt19937_64 gen(5);
    const Config cfg = grid(2, 3);
    const auto labels = labels_for({1.5f, 4.0f}, cfg);
    std::vector<Var> scores;
    for (const auto& l : labels) scores.emplace_back(random_tensor(l.values.shape(), gen), true);
    const Var pred(random_tensor({1, 1, 2}, gen, 0, 6), true);
    const DisparityMap gt{Tensor({1, 1, 2}, std::vector<real>{1.5f, 4.0f})};
    const ValidMask mask = ValidMask::all({1, 1, 2});
    Var total = total_loss(stage_loss(scores, labels, mask), l1_loss(pred, gt, mask));
    total.backward();
    CHECK(mfm_test::max_abs(pred.grad()) > 0);
    for (const auto& s : scores) CHECK(mfm_test::max_abs(s.grad()) > 0);
    CHECK_THROWS_AS((void)total_loss(Var(Tensor({1}, std::numeric_limits<real>::quiet_NaN())), Var(Tensor({1}))),
                    NumericError);
}
