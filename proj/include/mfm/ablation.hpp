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

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mfm/config.hpp"
#include "mfm/data.hpp"
#include "mfm/eval.hpp"

MFM_NAMESPACE_BEGIN

struct AblationRow {
    Variant variant = Variant::full;
    std::string label;
    Metrics metrics;
    double final_loss = 0.0;
};

/// Row order of the report: baseline, +decouple, +multistage, +mutual aid.
inline constexpr Variant kAblationOrder[] = {Variant::baseline, Variant::decouple, Variant::multistage, Variant::full};

std::string ablation_label(Variant v);

/// Trains every variant from the same seed and budget, then evaluates each on `eval`.
std::vector<AblationRow> ablation_run(const Config& base, std::span<const Sample> train,
                                      std::span<const Sample> eval, std::ostream* progress = nullptr);

/// Aligned table of EPE, >1px and >3px (percent), then one key=value block per row.
std::string format_ablation_report(const std::vector<AblationRow>& rows);

MFM_NAMESPACE_END
