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

#include "mfm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfm/errors.hpp"
#include "mfm/model.hpp"
#include "mfm/regression.hpp"

MFM_NAMESPACE_BEGIN

namespace {

std::int64_t check_aligned(const Tensor& pred, const DisparityMap& gt, const ValidMask& mask) {
    if (pred.numel() != gt.values.numel() || pred.shape() != gt.values.shape())
        throw ShapeError("prediction " + shape_str(pred.shape()) + " and ground truth " +
                         shape_str(gt.values.shape()) + " differ");
    if (mask.size() != gt.values.numel()) throw ShapeError("mask does not match ground truth");
    const std::int64_t valid = mask.count();
    if (valid == 0) throw MaskError("no valid pixel to evaluate");
    return valid;
}

template <class Pred>
double fraction(const Tensor& pred, const DisparityMap& gt, const ValidMask& mask, Pred&& is_bad) {
    const std::int64_t valid = check_aligned(pred, gt, mask);
    std::int64_t bad = 0;
    for (std::int64_t i = 0; i < pred.numel(); ++i)
        if (mask[i] && is_bad(static_cast<double>(pred[i]), static_cast<double>(gt.values[i]))) ++bad;
    return static_cast<double>(bad) / static_cast<double>(valid);
}

}  // namespace

double epe(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask) {
    const std::int64_t valid = check_aligned(pred.values, gt, mask);
    double sum = 0.0;
    for (std::int64_t i = 0; i < pred.values.numel(); ++i)
        if (mask[i]) sum += std::abs(static_cast<double>(pred.values[i]) - static_cast<double>(gt.values[i]));
    return sum / static_cast<double>(valid);
}

double pct_error(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask, double threshold) {
    if (!(threshold > 0.0)) throw RangeError("error threshold must be positive");
    return fraction(pred.values, gt, mask, [threshold](double p, double g) { return std::abs(p - g) > threshold; });
}

double d1(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask) {
    return fraction(pred.values, gt, mask,
                    [](double p, double g) { return std::abs(p - g) > std::max(3.0, 0.05 * g); });
}

std::vector<double> peak_deviation(const FullCostVolume& volume, const DisparityMap& gt, const ValidMask& mask,
                                   const std::vector<double>& thresholds) {
    if (!volume.normalized) throw StateError("peak deviation needs a normalized cost volume");
    const Tensor peaks = argmax_disparity(volume);
    std::vector<double> out;
    for (double t : thresholds)
        out.push_back(fraction(peaks, gt, mask, [t](double p, double g) { return std::abs(p - g) > t; }));
    return out;
}

std::array<std::uint8_t, 3> error_color(double error) {
    struct Stop {
        double at;
        double r, g, b;
    };
    static constexpr Stop stops[] = {
        {0.00, 0, 0, 96}, {0.25, 0, 64, 255}, {0.50, 0, 255, 255}, {0.75, 255, 255, 0}, {1.00, 255, 0, 0},
    };
    const double t = std::clamp(error / kErrorMapMax, 0.0, 1.0);
    std::size_t i = 1;
    while (i + 1 < std::size(stops) && t > stops[i].at) ++i;
    const Stop& a = stops[i - 1];
    const Stop& b = stops[i];
    const double u = (t - a.at) / (b.at - a.at);
    auto mix = [u](double x, double y) { return static_cast<std::uint8_t>(std::lround(x + (y - x) * u)); };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

void error_map(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask,
               const std::filesystem::path& out_path) {
    check_aligned(pred.values, gt, mask);
    const std::int64_t h = gt.values.dim(-2), w = gt.values.dim(-1);
    if (gt.values.numel() != h * w) throw ShapeError("error_map expects a single map");
    Tensor image({1, 3, h, w});
    const std::int64_t plane = h * w;
    for (std::int64_t i = 0; i < plane; ++i) {
        if (!mask[i]) continue;
        const auto c = error_color(std::abs(static_cast<double>(pred.values[i]) - static_cast<double>(gt.values[i])));
        for (int ch = 0; ch < 3; ++ch) image[ch * plane + i] = static_cast<real>(c[static_cast<std::size_t>(ch)] / 255.0);
    }
    write_image(out_path, image);
}

Metrics evaluate(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask) {
    Metrics m;
    m.epe = epe(pred, gt, mask);
    m.bad1 = pct_error(pred, gt, mask, 1.0);
    m.bad3 = pct_error(pred, gt, mask, 3.0);
    m.d1 = d1(pred, gt, mask);
    m.pixels = mask.count();
    return m;
}

Metrics evaluate_network(const Network& net, std::span<const Sample> samples, int batch_size) {
    if (samples.empty()) throw RangeError("evaluate_network: empty dataset");
    if (batch_size <= 0) throw RangeError("evaluate_network: batch size must be positive");
    double abs_sum = 0.0, bad1 = 0.0, bad3 = 0.0, bad_d1 = 0.0;
    std::int64_t pixels = 0;
    for (std::size_t start = 0; start < samples.size();) {
        std::size_t end = start + 1;
        while (end < samples.size() && end - start < static_cast<std::size_t>(batch_size) &&
               samples[end].pair.left.shape() == samples[start].pair.left.shape())
            ++end;
        const auto group = samples.subspan(start, end - start);
        const Sample batch = make_batch(group, static_cast<int>(group[0].pair.height()),
                                        static_cast<int>(group[0].pair.width()), 0, net.config().n);
        const DisparityMap pred = net.predict(batch.pair);
        const std::int64_t valid = batch.mask.count();
        if (valid > 0) {
            const Metrics m = evaluate(pred, batch.gt, batch.mask);
            const auto v = static_cast<double>(valid);
            abs_sum += m.epe * v;
            bad1 += m.bad1 * v;
            bad3 += m.bad3 * v;
            bad_d1 += m.d1 * v;
            pixels += valid;
        }
        start = end;
    }
    if (pixels == 0) throw MaskError("evaluate_network: no valid pixel in the dataset");
    const auto p = static_cast<double>(pixels);
    return {abs_sum / p, bad1 / p, bad3 / p, bad_d1 / p, pixels};
}

MFM_NAMESPACE_END
