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
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mfm/types.hpp"

MFM_NAMESPACE_BEGIN

/// size x size foreground square at (x0, y0) in left-image coordinates.
struct Square {
    int x0 = 0;
    int y0 = 0;
    int size = 0;
    double disp = 0.0;
};

/// Random-dot stereogram: a noise right image and a piecewise-constant
/// disparity field of a background plane and fronto-parallel squares.
struct RdsSpec {
    int height = 0;
    int width = 0;
    int d_max = 0;
    double background_disp = 0.0;
    std::vector<Square> squares;
    std::uint64_t noise_seed = 0;
};

/// One stereo sample with full-resolution ground truth; batch dimension B >= 1.
struct Sample {
    ImagePair pair;
    DisparityMap gt;
    ValidMask mask;
};

/// Builds the sample described by `spec`.
///
/// The right image is i.i.d. uniform noise. Each left pixel samples the right
/// row at x - d(x, y), linearly blended for fractional d; where squares overlap
/// the larger disparity wins. A left pixel is masked out when x - d < 0 or when
/// a right column it samples is also sampled by a pixel of larger disparity
/// (the surface is hidden in the right view). Throws SpecError for disparities
/// outside [0, d_max), squares leaving the image, or squares whose source
/// columns fall left of the image.
Sample gen_rds(const RdsSpec& spec);

/// Parameters for drawing random RdsSpecs.
struct RdsDistribution {
    int height = 64;
    int width = 96;
    int d_max = 16;
    int min_squares = 1;
    int max_squares = 3;
    int min_size = 16;
    int max_size = 32;
    double max_background_disp = 8.0;
    // Largest foreground disparity, exclusive; keeps peaks off the last candidate.
    double max_foreground_disp = 14.0;
    bool fractional = true;

    static RdsDistribution for_size(int height, int width, int d_max);
};

/// Deterministic in (dist, seed, index).
RdsSpec sample_rds_spec(const RdsDistribution& dist, std::uint64_t seed, int index);
std::vector<Sample> make_rds_dataset(const RdsDistribution& dist, int count, std::uint64_t seed);

/// Recipe for `gen-data`: fixed square geometry (noise varies per sample) or random specs.
struct GeneratorSpec {
    std::optional<RdsSpec> fixed;
    RdsDistribution dist;
};

/// key = value text: height, width, d_max, and either `square = x0,y0,size,disp`
/// lines (plus background_disp) or min_squares, max_squares, min_size, max_size,
/// max_background_disp, max_foreground_disp, fractional.
GeneratorSpec parse_generator_spec(std::string_view text);
RdsSpec generator_spec_at(const GeneratorSpec& gen, std::uint64_t seed, int index);

struct PfmImage {
    Tensor values;  // [H, W], top row first
    double scale = -1.0;
};

PfmImage read_pfm(const std::filesystem::path& path);
/// Writes a little-endian "Pf" file (scale -|scale|).
void write_pfm(const std::filesystem::path& path, const Tensor& values, double scale = 1.0);

/// KITTI convention: disparity = value / 256, value 0 marks an invalid pixel.
std::pair<DisparityMap, ValidMask> read_disparity_png16(const std::filesystem::path& path);
/// Stores round(d * 256) clamped to [1, 65535] for valid pixels and 0 elsewhere.
/// Accepts [H,W] or [1,H,W] maps.
void write_disparity_png16(const std::filesystem::path& path, const DisparityMap& disp, const ValidMask& mask);

/// 8/16-bit gray, RGB or RGBA PNG -> [1,3,H,W] in [0,1].
Tensor read_image(const std::filesystem::path& path);
/// [1,3,H,W] or [3,H,W] in [0,1] -> 8-bit RGB PNG.
void write_image(const std::filesystem::path& path, const Tensor& image);

/// Random crops with one window per sample shared by left/right/gt/mask,
/// stacked along the batch axis. Throws RangeError when a crop dimension is not
/// divisible by n or exceeds a sample.
Sample make_batch(std::span<const Sample> samples, int crop_h, int crop_w, std::uint64_t seed, int n);

/// Element `index` of a batched sample as a B = 1 sample.
Sample sample_at(const Sample& batch, std::int64_t index);

/// NNNNNN_left.png, NNNNNN_right.png, NNNNNN_disp.pfm (invalid pixels as +inf).
void save_sample(const std::filesystem::path& dir, int index, const Sample& sample);
/// Loads every *_left.png with its right image and a _disp.pfm or _disp.png ground truth, in name order.
std::vector<Sample> load_dataset(const std::filesystem::path& dir);

MFM_NAMESPACE_END
