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

#include <algorithm>
#include <map>
#include <random>

#include "helpers.hpp"
#include "mfm/aggregation.hpp"
#include "mfm/errors.hpp"
#include "mfm/model.hpp"

using namespace mfm;
using mfm_test::random_tensor;

namespace {

Config small(int n, int k, Variant variant = Variant::full) {
    Config c = preset("tiny");
    c.n = n;
    c.k = k;
    c.d_max = n * k;
    c.variant = variant;
    return validate_config(c);
}

RawCorrelationVolume random_raw(const Config& cfg, std::mt19937_64& gen, std::int64_t h = 3, std::int64_t w = 4) {
    return {Var(random_tensor({1, cfg.raw_channels(), cfg.k, h, w}, gen))};
}

std::vector<StageFeatureVolume> random_features(int n, const Shape& s, std::mt19937_64& gen) {
    std::vector<StageFeatureVolume> f;
    for (int i = 0; i < n; ++i) f.push_back({Var(random_tensor(s, gen)), i});
    return f;
}

}  // namespace

TEST_CASE("init_ori: shape contract and linearity at zero") {
    Config cfg = preset("desk");
    cfg.k = 48;
    cfg.d_max = 192;
    REQUIRE(cfg.raw_channels() == 32);
    ParameterStore store;
    Rng rng(1);
    Aggregator agg(store, cfg, rng);
    std::mt19937_64 gen(2);
    const auto ori = agg.init_ori(random_raw(cfg, gen, 2, 2));
    CHECK(ori.values.shape() == Shape{1, 16, 48, 2, 2});
    CHECK(ori.stage == kOriStage);
    const auto zero = agg.init_ori({Var(Tensor({1, 32, 48, 2, 2}))});
    CHECK(mfm_test::max_abs(zero.values.value()) == 0);
}

TEST_CASE("stage_decouple: residual identity with a zeroed output layer") {
    const Config cfg = small(2, 4);
    ParameterStore store;
    Rng rng(3);
    Aggregator agg(store, cfg, rng);
    std::mt19937_64 gen(4);
    const Shape s{1, cfg.vol_channels, 4, 3, 5};
    const StageFeatureVolume ori{Var(random_tensor(s, gen)), kOriStage};
    const StageFeatureVolume prev{Var(random_tensor(s, gen)), 0};
    Var w = agg.hourglass(1).output_layer().weight;
    Var b = agg.hourglass(1).output_layer().bias;
    w.mutable_value().fill(0);
    b.mutable_value().fill(0);
    const auto f1 = agg.stage_decouple(prev, ori, 1);
    CHECK(f1.values.value() == ori.values.value());
    CHECK(f1.stage == 1);
    CHECK(agg.stage_decouple(prev, ori, 0).values.shape() == s);
    CHECK_THROWS_AS((void)agg.stage_decouple(prev, ori, 2), IndexError);
    const StageFeatureVolume wrong{Var(random_tensor({1, cfg.vol_channels, 4, 3, 4}, gen)), 0};
    CHECK_THROWS_AS((void)agg.stage_decouple(wrong, ori, 0), ShapeError);
}

TEST_CASE("property: residual anchoring F^s - F^ori equals the hourglass output") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 2 + trial % 3;
        const Config cfg = small(n, 2 + trial % 2);
        ParameterStore store;
        Rng rng(static_cast<std::uint64_t>(trial));
        Aggregator agg(store, cfg, rng);
        const Shape s{1, cfg.vol_channels, cfg.k, mfm_test::uniform_int(gen, 1, 5), mfm_test::uniform_int(gen, 1, 5)};
        const StageFeatureVolume ori{Var(random_tensor(s, gen)), kOriStage};
        StageFeatureVolume prev = ori;
        for (int st = 0; st < n; ++st) {
            const Tensor de = agg.hourglass(st)(prev.values).value();
            const auto next = agg.stage_decouple(prev, ori, st);
            CHECK(add(ori.values, Var(de)).value() == next.values.value());
            CHECK(max_abs_diff(sub(next.values, ori.values).value(), de) <= 1e-5);
            prev = next;
        }
    }
}

TEST_CASE("serial chaining: call-order trace on n=3") {
    const Config cfg = small(3, 4);
    ParameterStore store;
    Rng rng(6);
    Aggregator agg(store, cfg, rng);
    std::vector<TraceEvent> events;
    agg.set_trace([&](const TraceEvent& e) { events.push_back(e); });
    std::mt19937_64 gen(7);
    const RawCorrelationVolume raw = random_raw(cfg, gen);
    const auto scores = agg.forward_all(raw);
    REQUIRE(scores.size() == 3);
    REQUIRE(events.size() == 1 + 3 + 3);

    CHECK(events[0].op == "init_ori");
    CHECK(events[0].inputs == std::vector<const void*>{raw.values.id()});
    const void* ori = events[0].output;
    std::vector<const void*> stage_out;
    for (int s = 0; s < 3; ++s) {
        const TraceEvent& e = events[static_cast<std::size_t>(1 + s)];
        CHECK(e.op == "stage_decouple");
        CHECK(e.stage == s);
        const void* expected_prev = s == 0 ? ori : stage_out.back();
        CHECK(e.inputs == std::vector<const void*>{expected_prev, ori});
        stage_out.push_back(e.output);
    }
    for (int s = 0; s < 3; ++s) {
        const TraceEvent& e = events[static_cast<std::size_t>(4 + s)];
        CHECK(e.op == "mutual_aid_decode");
        CHECK(e.stage == s);
        REQUIRE(e.inputs.size() == 3);
        CHECK(e.inputs[0] == stage_out[static_cast<std::size_t>(s)]);
        std::vector<const void*> others(e.inputs.begin() + 1, e.inputs.end()), expected;
        for (int i = 0; i < 3; ++i)
            if (i != s) expected.push_back(stage_out[static_cast<std::size_t>(i)]);
        CHECK(others == expected);
        CHECK(e.output == scores[static_cast<std::size_t>(s)].values.id());
    }
}

TEST_CASE("voting: direct sums and degenerate cases") {
    std::mt19937_64 gen(8);
    const Shape s{1, 8, 4, 2, 3};
    {
        const Config cfg = small(3, 4);
        ParameterStore store;
        Rng rng(0);
        Aggregator agg(store, cfg, rng);
        const auto f = random_features(3, s, gen);
        CHECK(agg.voting(f, 1).value() == add(f[0].values, f[2].values).value());
        CHECK_THROWS_AS((void)agg.voting(f, 3), IndexError);
        CHECK_THROWS_AS((void)agg.voting(std::span(f).first(2), 0), ArityError);
        CHECK_THROWS_AS((void)agg.mutual_aid_decode(f, -1), IndexError);
    }
    {
        const Config cfg = small(2, 4);
        ParameterStore store;
        Rng rng(0);
        Aggregator agg(store, cfg, rng);
        const auto f = random_features(2, s, gen);
        CHECK(agg.voting(f, 0).value() == f[1].values.value());
        CHECK(agg.voting(f, 1).value() == f[0].values.value());
    }
}

TEST_CASE("property: voting symmetry under permutations of the other stages") {
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 3 + trial % 3;
        const Config cfg = small(n, 2);
        ParameterStore store;
        Rng rng(static_cast<std::uint64_t>(trial));
        Aggregator agg(store, cfg, rng);
        auto f = random_features(n, {1, cfg.vol_channels, 2, 2, 3}, gen);
        const int s = mfm_test::uniform_int(gen, 0, n - 1);
        const Tensor v = agg.voting(f, s).value();
        const Tensor p = agg.mutual_aid_decode(f, s).values.value();
        for (int perm = 0; perm < 4; ++perm) {
            std::shuffle(f.begin(), f.end(), gen);
            CHECK(max_abs_diff(agg.voting(f, s).value(), v) <= 1e-5);
            CHECK(max_abs_diff(agg.mutual_aid_decode(f, s).values.value(), p) <= 1e-5);
        }
    }
}

TEST_CASE("forward_all: shapes per variant and determinism") {
    std::mt19937_64 gen(10);
    {
        Config cfg = preset("desk");
        cfg.k = 48;
        cfg.d_max = 192;
        ParameterStore store;
        Rng rng(11);
        Aggregator agg(store, cfg, rng);
        const auto raw = random_raw(cfg, gen, 2, 2);
        const auto a = agg.forward_all(raw), b = agg.forward_all(raw);
        REQUIRE(a.size() == 4);
        for (int s = 0; s < 4; ++s) {
            CHECK(a[static_cast<std::size_t>(s)].values.shape() == Shape{1, 48, 2, 2});
            CHECK(a[static_cast<std::size_t>(s)].stage == s);
            CHECK(a[static_cast<std::size_t>(s)].values.value() == b[static_cast<std::size_t>(s)].values.value());
        }
    }
    for (Variant v : {Variant::baseline, Variant::decouple, Variant::multistage}) {
        const Config cfg = small(2, 4, v);
        ParameterStore store;
        Rng rng(12);
        Aggregator agg(store, cfg, rng);
        const auto out = agg.forward_all(random_raw(cfg, gen));
        CHECK(out.size() == (v == Variant::baseline ? 1U : 2U));
        for (const auto& p : out) CHECK(p.values.shape() == Shape{1, 4, 3, 4});
        if (v != Variant::multistage) {
            std::vector<StageFeatureVolume> f = random_features(2, {1, cfg.vol_channels, 4, 3, 4}, gen);
            CHECK_THROWS_AS((void)agg.mutual_aid_decode(f, 0), StateError);
        }
        for (const auto& e : store.entries()) CHECK(e.name.find(".vote.") == std::string::npos);
    }
}

TEST_CASE("parameter names are module-scoped and per-stage") {
    const Config cfg = small(3, 4);
    ParameterStore store;
    Rng rng(0);
    Aggregator agg(store, cfg, rng);
    std::map<std::string, int> prefixes;
    for (const auto& e : store.entries()) {
        CHECK(e.name.rfind("aggregation.", 0) == 0);
        ++prefixes[e.name.substr(0, e.name.find('.', 12))];
    }
    CHECK(prefixes["aggregation.ori0"] == 2);
    for (int s = 0; s < 3; ++s) CHECK(prefixes["aggregation.stage" + std::to_string(s)] == 2 * (7 + 3));
}

TEST_CASE("gradient coverage: every parameter receives gradient from the total loss") {
    for (Variant v : {Variant::full, Variant::multistage, Variant::decouple, Variant::baseline}) {
        Config cfg = preset("tiny");
        cfg.variant = v;
        Network net(cfg);
        const auto samples = make_rds_dataset(RdsDistribution::for_size(16, 24, cfg.d_max), 1, 3);
        const Sample batch = make_batch(samples, 16, 24, 0, cfg.n);
        const LossTerms loss = net.loss(net.forward(batch.pair), batch);
        Var total = loss.total;
        total.backward();
        for (const auto& e : net.parameters().entries())
            CHECK_MESSAGE(mfm_test::max_abs(e.var.grad()) > 0, variant_name(v), " ", e.name);
    }
}
