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

#include "mfm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

namespace {

std::mt19937_64 indexed_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

void validate_rds(const RdsSpec& s) {
    if (s.height <= 0 || s.width <= 0) throw SpecError("RDS image size must be positive");
    if (s.d_max <= 0) throw SpecError("RDS d_max must be positive");
    auto check_disp = [&](double d, const char* what) {
        if (!(d >= 0.0 && d < s.d_max))
            throw SpecError(std::string(what) + " disparity " + std::to_string(d) + " outside [0, " +
                            std::to_string(s.d_max) + ")");
    };
    check_disp(s.background_disp, "background");
    for (const auto& q : s.squares) {
        check_disp(q.disp, "square");
        if (q.size <= 0 || q.x0 < 0 || q.y0 < 0 || q.x0 + q.size > s.width || q.y0 + q.size > s.height)
            throw SpecError("square at (" + std::to_string(q.x0) + "," + std::to_string(q.y0) + ") size " +
                            std::to_string(q.size) + " leaves the image");
        if (q.x0 - q.disp < 0.0)
            throw SpecError("square at x0=" + std::to_string(q.x0) + " with disparity " + std::to_string(q.disp) +
                            " warps out of bounds");
    }
}

}  // namespace

Sample gen_rds(const RdsSpec& spec) {
    validate_rds(spec);
    const std::int64_t h = spec.height, w = spec.width, plane = h * w;

    std::mt19937_64 rng(spec.noise_seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Tensor right({1, 3, h, w});
    for (auto& v : right.values()) v = static_cast<real>(uni(rng));

    Tensor disp({1, h, w}, static_cast<real>(spec.background_disp));
    for (const auto& q : spec.squares)
        for (int y = q.y0; y < q.y0 + q.size; ++y)
            for (int x = q.x0; x < q.x0 + q.size; ++x) {
                real& d = disp[y * w + x];
                d = std::max(d, static_cast<real>(q.disp));
            }

    Tensor left({1, 3, h, w});
    ValidMask mask = ValidMask::all({1, h, w}, false);
    std::vector<real> claim(static_cast<std::size_t>(w));
    for (std::int64_t y = 0; y < h; ++y) {
        // Largest disparity sampling each right column of this row.
        std::fill(claim.begin(), claim.end(), real(-1));
        for (std::int64_t x = 0; x < w; ++x) {
            const real d = disp[y * w + x];
            const double xs = static_cast<double>(x) - d;
            if (xs < 0.0) continue;
            const auto c0 = static_cast<std::int64_t>(std::floor(xs));
            const bool blend = xs > static_cast<double>(c0);
            for (std::int64_t c = c0; c <= c0 + (blend ? 1 : 0); ++c)
                claim[static_cast<std::size_t>(c)] = std::max(claim[static_cast<std::size_t>(c)], d);
        }
        for (std::int64_t x = 0; x < w; ++x) {
            const std::int64_t at = y * w + x;
            const real d = disp[at];
            const double xs = static_cast<double>(x) - d;
            if (xs < 0.0) {
                for (int c = 0; c < 3; ++c) left[c * plane + at] = static_cast<real>(uni(rng));
                continue;
            }
            const auto c0 = static_cast<std::int64_t>(std::floor(xs));
            const real t = static_cast<real>(xs - static_cast<double>(c0));
            bool visible = claim[static_cast<std::size_t>(c0)] <= d;
            for (int c = 0; c < 3; ++c) {
                const real* row = right.data() + c * plane + y * w;
                left[c * plane + at] = t > 0 ? (real(1) - t) * row[c0] + t * row[c0 + 1] : row[c0];
            }
            if (t > 0) visible = visible && claim[static_cast<std::size_t>(c0 + 1)] <= d;
            mask.flags[static_cast<std::size_t>(at)] = visible ? 1 : 0;
        }
    }
    return Sample{ImagePair{std::move(left), std::move(right)}, DisparityMap{std::move(disp), Resolution::full},
                  std::move(mask)};
}

RdsDistribution RdsDistribution::for_size(int height, int width, int d_max) {
    RdsDistribution d;
    d.height = height;
    d.width = width;
    d.d_max = d_max;
    d.min_size = std::max(2, std::min(height, width) / 4);
    d.max_size = std::max(d.min_size, std::min(height, width) / 2);
    d.max_background_disp = d_max / 2.0;
    d.max_foreground_disp = std::max(d.max_background_disp + 1.0, d_max - 2.0);
    return d;
}

RdsSpec sample_rds_spec(const RdsDistribution& dist, std::uint64_t seed, int index) {
    if (dist.min_squares < 0 || dist.max_squares < dist.min_squares || dist.min_size <= 0 ||
        dist.max_size < dist.min_size || dist.max_size > std::min(dist.height, dist.width))
        throw SpecError("invalid RDS distribution parameters");
    if (!(dist.max_background_disp > 0.0) || dist.max_foreground_disp > dist.d_max ||
        dist.max_foreground_disp <= dist.max_background_disp)
        throw SpecError("RDS distribution needs 0 < max_background_disp < max_foreground_disp <= d_max");
    auto rng = indexed_rng(seed, static_cast<std::uint64_t>(index));
    auto draw = [&](double lo, double hi) {
        const double v = std::uniform_real_distribution<double>(lo, hi)(rng);
        return dist.fractional ? v : std::floor(v);
    };
    auto draw_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    RdsSpec s;
    s.height = dist.height;
    s.width = dist.width;
    s.d_max = dist.d_max;
    s.background_disp = draw(0.0, dist.max_background_disp);
    const int count = draw_int(dist.min_squares, dist.max_squares);
    for (int i = 0; i < count; ++i) {
        Square q;
        q.size = draw_int(dist.min_size, dist.max_size);
        q.disp = draw(s.background_disp + 1.0, dist.max_foreground_disp);
        const int min_x = static_cast<int>(std::ceil(q.disp));
        if (min_x + q.size > dist.width) continue;
        q.x0 = draw_int(min_x, dist.width - q.size);
        q.y0 = draw_int(0, dist.height - q.size);
        s.squares.push_back(q);
    }
    s.noise_seed = rng();
    return s;
}

std::vector<Sample> make_rds_dataset(const RdsDistribution& dist, int count, std::uint64_t seed) {
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) out.push_back(gen_rds(sample_rds_spec(dist, seed, i)));
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

template <class T>
T parse_value(std::string_view key, std::string_view text) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw SpecError("generator spec key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
    return value;
}

Square parse_square(std::string_view text) {
    std::vector<std::string_view> parts;
    while (true) {
        const auto comma = text.find(',');
        parts.push_back(trim(text.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    if (parts.size() != 4) throw SpecError("square needs x0,y0,size,disp");
    return Square{parse_value<int>("square", parts[0]), parse_value<int>("square", parts[1]),
                  parse_value<int>("square", parts[2]), parse_value<double>("square", parts[3])};
}

}  // namespace

GeneratorSpec parse_generator_spec(std::string_view text) {
    RdsSpec fixed;
    RdsDistribution dist;
    bool has_squares = false;
    bool has_background = false;
    bool size_given = false;
    bool background_given = false;
    bool foreground_given = false;
    std::istringstream in{std::string(text)};
    int line_no = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw SpecError("generator spec line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key == "height") {
            fixed.height = dist.height = parse_value<int>(key, value);
        } else if (key == "width") {
            fixed.width = dist.width = parse_value<int>(key, value);
        } else if (key == "d_max" || key == "D_max") {
            fixed.d_max = dist.d_max = parse_value<int>(key, value);
        } else if (key == "background_disp") {
            fixed.background_disp = parse_value<double>(key, value);
            has_background = true;
        } else if (key == "square") {
            fixed.squares.push_back(parse_square(value));
            has_squares = true;
        } else if (key == "noise_seed") {
            fixed.noise_seed = parse_value<std::uint64_t>(key, value);
        } else if (key == "min_squares") {
            dist.min_squares = parse_value<int>(key, value);
        } else if (key == "max_squares") {
            dist.max_squares = parse_value<int>(key, value);
        } else if (key == "min_size") {
            dist.min_size = parse_value<int>(key, value);
            size_given = true;
        } else if (key == "max_size") {
            dist.max_size = parse_value<int>(key, value);
            size_given = true;
        } else if (key == "max_background_disp") {
            dist.max_background_disp = parse_value<double>(key, value);
            background_given = true;
        } else if (key == "max_foreground_disp") {
            dist.max_foreground_disp = parse_value<double>(key, value);
            foreground_given = true;
        } else if (key == "fractional") {
            dist.fractional = value == "true" || value == "1";
        } else {
            throw SpecError("generator spec line " + std::to_string(line_no) + ": unknown key '" + std::string(key) +
                            "'");
        }
    }
    const RdsDistribution defaults = RdsDistribution::for_size(dist.height, dist.width, dist.d_max);
    if (!size_given) {
        dist.min_size = defaults.min_size;
        dist.max_size = defaults.max_size;
    }
    if (!background_given) dist.max_background_disp = defaults.max_background_disp;
    if (!foreground_given) dist.max_foreground_disp = defaults.max_foreground_disp;
    GeneratorSpec gen;
    gen.dist = dist;
    if (has_squares || has_background) gen.fixed = fixed;
    return gen;
}

RdsSpec generator_spec_at(const GeneratorSpec& gen, std::uint64_t seed, int index) {
    if (!gen.fixed) return sample_rds_spec(gen.dist, seed, index);
    RdsSpec s = *gen.fixed;
    auto rng = indexed_rng(seed ^ s.noise_seed, static_cast<std::uint64_t>(index));
    s.noise_seed = rng();
    return s;
}

Sample make_batch(std::span<const Sample> samples, int crop_h, int crop_w, std::uint64_t seed, int n) {
    if (samples.empty()) throw RangeError("make_batch: no samples");
    if (n <= 0 || crop_h <= 0 || crop_w <= 0 || crop_h % n != 0 || crop_w % n != 0)
        throw RangeError("make_batch: crop " + std::to_string(crop_h) + "x" + std::to_string(crop_w) +
                         " must be positive and divisible by n=" + std::to_string(n));
    const auto batch = static_cast<std::int64_t>(samples.size());
    Tensor left({batch, 3, crop_h, crop_w});
    Tensor right({batch, 3, crop_h, crop_w});
    Tensor gt({batch, crop_h, crop_w});
    ValidMask mask = ValidMask::all({batch, crop_h, crop_w}, false);
    std::mt19937_64 rng(seed);
    const std::int64_t crop_plane = static_cast<std::int64_t>(crop_h) * crop_w;
    for (std::int64_t b = 0; b < batch; ++b) {
        const Sample& s = samples[static_cast<std::size_t>(b)];
        const std::int64_t h = s.pair.height(), w = s.pair.width();
        if (s.pair.batch() != 1) throw RangeError("make_batch: inputs must be single samples");
        if (crop_h > h || crop_w > w)
            throw RangeError("make_batch: crop " + std::to_string(crop_h) + "x" + std::to_string(crop_w) +
                             " exceeds sample " + std::to_string(h) + "x" + std::to_string(w));
        const auto y0 = std::uniform_int_distribution<std::int64_t>(0, h - crop_h)(rng);
        const auto x0 = std::uniform_int_distribution<std::int64_t>(0, w - crop_w)(rng);
        for (std::int64_t y = 0; y < crop_h; ++y) {
            for (int c = 0; c < 3; ++c) {
                std::copy_n(s.pair.left.data() + (c * h + y0 + y) * w + x0, crop_w,
                            left.data() + ((b * 3 + c) * crop_h + y) * crop_w);
                std::copy_n(s.pair.right.data() + (c * h + y0 + y) * w + x0, crop_w,
                            right.data() + ((b * 3 + c) * crop_h + y) * crop_w);
            }
            std::copy_n(s.gt.values.data() + (y0 + y) * w + x0, crop_w, gt.data() + b * crop_plane + y * crop_w);
            std::copy_n(s.mask.flags.begin() + (y0 + y) * w + x0, crop_w,
                        mask.flags.begin() + b * crop_plane + y * crop_w);
        }
    }
    return Sample{ImagePair{std::move(left), std::move(right)}, DisparityMap{std::move(gt), Resolution::full},
                  std::move(mask)};
}

Sample sample_at(const Sample& batch, std::int64_t index) {
    const std::int64_t h = batch.pair.height(), w = batch.pair.width(), plane = h * w;
    if (index < 0 || index >= batch.pair.batch()) throw IndexError("sample_at: index out of range");
    auto image = [&](const Tensor& t) {
        return Tensor({1, 3, h, w}, std::vector<real>(t.data() + index * 3 * plane, t.data() + (index + 1) * 3 * plane));
    };
    Tensor gt({1, h, w},
              std::vector<real>(batch.gt.values.data() + index * plane, batch.gt.values.data() + (index + 1) * plane));
    ValidMask mask{{1, h, w},
                   std::vector<std::uint8_t>(batch.mask.flags.begin() + index * plane,
                                             batch.mask.flags.begin() + (index + 1) * plane)};
    return Sample{ImagePair{image(batch.pair.left), image(batch.pair.right)}, DisparityMap{std::move(gt)},
                  std::move(mask)};
}

MFM_NAMESPACE_END
