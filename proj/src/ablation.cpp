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

#include "mfm/ablation.hpp"

#include <cstdio>
#include <filesystem>
#include <ostream>

#include "mfm/train.hpp"

MFM_NAMESPACE_BEGIN

std::string ablation_label(Variant v) {
    switch (v) {
        case Variant::baseline: return "B";
        case Variant::decouple: return "B+de";
        case Variant::multistage: return "B+de+ms";
        case Variant::full: return "B+de+ms+sma";
    }
    return "?";
}

std::vector<AblationRow> ablation_run(const Config& base, std::span<const Sample> train,
                                      std::span<const Sample> eval, std::ostream* progress) {
    std::vector<AblationRow> rows;
    for (Variant v : kAblationOrder) {
        Config cfg = base;
        cfg.variant = v;
        cfg.train.eval_every = 0;
        if (!base.train.checkpoint_dir.empty())
            cfg.train.checkpoint_dir = (std::filesystem::path(base.train.checkpoint_dir) / variant_name(v)).string();
        Network net(cfg);
        TrainOptions options;
        options.save_checkpoints = !cfg.train.checkpoint_dir.empty();
        const TrainResult trained = train_loop(net, train, options);
        AblationRow row{v, ablation_label(v), evaluate_network(net, eval, cfg.train.batch_size),
                        trained.iterations.empty() ? 0.0 : trained.iterations.back().loss};
        if (progress) {
            *progress << "variant " << variant_name(v) << " iterations " << trained.checkpoint.iteration << " epe "
                      << row.metrics.epe << std::endl;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_ablation_report(const std::vector<AblationRow>& rows) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-12s %10s %10s %10s\n", "variant", "label", "EPE", ">1px(%)", ">3px(%)");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-12s %-12s %10.4f %10.2f %10.2f\n", std::string(variant_name(r.variant)).c_str(),
                      r.label.c_str(), r.metrics.epe, 100.0 * r.metrics.bad1, 100.0 * r.metrics.bad3);
        out += line;
    }
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line,
                      "\n[%s]\nlabel=%s\nepe=%.6f\nbad1=%.6f\nbad3=%.6f\nd1=%.6f\npixels=%lld\nfinal_loss=%.6f\n",
                      std::string(variant_name(r.variant)).c_str(), r.label.c_str(), r.metrics.epe, r.metrics.bad1,
                      r.metrics.bad3, r.metrics.d1, static_cast<long long>(r.metrics.pixels), r.final_loss);
        out += line;
    }
    return out;
}

MFM_NAMESPACE_END
