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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mfm/namespace.hpp"

MFM_NAMESPACE_BEGIN

/// Network variants of the ablation study. `full` is the complete pipeline.
enum class Variant {
    baseline,    // hourglass refinement, one low-resolution score volume, linear upsampling in disparity
    decouple,    // one decoder emits n scores per cell
    multistage,  // n serial stages, each decoded from its own features
    full,        // n serial stages with stages mutual aid
};

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct TrainConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 2;
    double base_lr = 0.001;
    std::vector<int> lr_milestones;
    double lr_factor = 0.5;
    int epochs = 1;
    std::uint64_t seed = 0;
    std::string checkpoint_dir;

    // Iteration cap; 0 runs every epoch to completion.
    int max_iterations = 0;
    // Epochs between training-set metric evaluations; 0 evaluates only after the last epoch.
    int eval_every = 1;
    // Random crop size; 0 keeps the full sample extent.
    int crop_h = 0;
    int crop_w = 0;
    // Training corpus: a directory written by `gen-data`, or synthetic pairs generated in memory.
    std::string data_dir;
    int rds_count = 32;
    int rds_height = 64;
    int rds_width = 96;
    std::uint64_t rds_seed = 1;
};

struct Config {
    int d_max = 16;
    int n = 4;
    int k = 4;
    int feat_channels = 32;
    int gwc_groups = 8;
    int cat_channels = 12;
    int vol_channels = 16;
    int stem_channels = 16;
    int res_blocks = 1;
    Variant variant = Variant::full;
    TrainConfig train;

    [[nodiscard]] int raw_channels() const noexcept { return gwc_groups + 2 * cat_channels; }
};

/// Returns `cfg` unchanged when every invariant holds; throws DivisibilityError,
/// RangeError or ConfigError otherwise.
Config validate_config(const Config& cfg);

/// Parses `key = value` lines. `#` starts a comment. A leading `preset = <name>`
/// selects the base values; unknown keys throw ConfigError. The result is validated.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& path);
/// Inverse of parse_config (every key written explicitly).
std::string format_config(const Config& cfg);

/// Named presets: tiny, desk, scene_flow, kitti.
Config preset(std::string_view name);

/// FNV-1a over the architecture-defining fields; identifies compatible checkpoints.
std::uint64_t config_hash(const Config& cfg);

/// Full-resolution disparity d <-> (cell m, stage i) with d = m*n + i.
struct CellIndex {
    int cell = 0;
    int stage = 0;
    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

CellIndex split_disparity(int d, int n);
int join_disparity(CellIndex index, int n);

MFM_NAMESPACE_END
