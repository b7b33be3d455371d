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
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfm/config.hpp"
#include "mfm/data.hpp"
#include "mfm/eval.hpp"
#include "mfm/model.hpp"
#include "mfm/nn.hpp"

MFM_NAMESPACE_BEGIN

/// base_lr times lr_factor for every milestone m with epoch >= m.
double lr_at(int epoch, const TrainConfig& tc);

struct Checkpoint {
    std::string config_text;
    std::uint64_t config_hash = 0;
    std::int64_t epoch = 0;  // completed epochs
    std::int64_t iteration = 0;
    std::int64_t adam_steps = 0;
    std::vector<std::pair<std::string, Tensor>> parameters;
    std::vector<Tensor> first_moments;
    std::vector<Tensor> second_moments;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint make_checkpoint(const Network& net, const Adam* adam, std::int64_t epoch, std::int64_t iteration);
/// Copies parameters (and moments when `adam` is given) into a network built from the same config.
void apply_checkpoint(const Checkpoint& ckpt, Network& net, Adam* adam);
std::unique_ptr<Network> network_from_checkpoint(const Checkpoint& ckpt);

/// Container: magic "MFMCKPT1", u32 version, u32 element bytes, u64 config
/// hash, i64 epoch, i64 iteration, i64 Adam steps, config text, then named
/// blobs (parameters, "adam.m/<name>", "adam.v/<name>"). Little-endian.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct IterationLog {
    std::int64_t iteration = 0;
    double loss = 0.0;
    double l1 = 0.0;
    double lstage = 0.0;
    double lr = 0.0;
};

struct EpochMetrics {
    std::int64_t epoch = 0;
    Metrics metrics;
};

struct TrainOptions {
    std::ostream* log = nullptr;          // per-iteration lines `iter loss l1 lstage lr`
    std::ostream* metrics_log = nullptr;  // per-evaluation lines
    std::filesystem::path resume;
    bool save_checkpoints = true;
    std::function<void(const IterationLog&)> on_iteration;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<IterationLog> iterations;
    std::vector<EpochMetrics> evaluations;
};

std::string format_iteration(const IterationLog& entry);

/// Seeded Adam training; throws NumericError naming the batch on a non-finite loss.
TrainResult train_loop(Network& net, std::span<const Sample> dataset, const TrainOptions& options = {});

/// Training corpus named by the config: data_dir if set, otherwise RDS samples.
std::vector<Sample> training_dataset(const Config& cfg);

MFM_NAMESPACE_END
