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

#include "mfm/supervision.hpp"

#include <cmath>
#include <string>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

namespace {

std::int64_t nearest_source(std::int64_t y, std::int64_t low, std::int64_t full) {
    if (low == 1) return 0;
    return (2 * y * (full - 1) + (low - 1)) / (2 * (low - 1));
}

void require_mask(const ValidMask& mask, const Tensor& t, const char* what) {
    if (mask.size() != t.numel())
        throw ShapeError(std::string(what) + ": mask has " + std::to_string(mask.size()) + " flags for " +
                         std::to_string(t.numel()) + " values");
}

// Scalar op: sum(x * weights), accumulated in double.
Var weighted_sum(const Var& x, Tensor weights) {
    require_shape(weights, x.shape(), "weighted_sum weights");
    double acc = 0.0;
    const Tensor& v = x.value();
    for (std::int64_t i = 0; i < v.numel(); ++i)
        if (weights[i] != 0) acc += static_cast<double>(weights[i]) * static_cast<double>(v[i]);
    return Var::make(Tensor({1}, {static_cast<real>(acc)}), {x}, [x, weights](const Tensor& g, const Tensor&) {
        Tensor& gx = x.grad_buffer();
        for (std::int64_t i = 0; i < gx.numel(); ++i) gx[i] += g[0] * weights[i];
    });
}

}  // namespace

std::pair<DisparityMap, ValidMask> downsample_nearest(const DisparityMap& gt, const ValidMask& mask, int n) {
    require_rank(gt.values, 3, "ground truth");
    require_mask(mask, gt.values, "ground truth");
    const std::int64_t batch = gt.values.dim(0), full_h = gt.values.dim(1), full_w = gt.values.dim(2);
    if (n <= 0 || full_h % n != 0 || full_w % n != 0)
        throw ShapeError("ground truth " + shape_str(gt.values.shape()) + " not divisible by n=" + std::to_string(n));
    const std::int64_t h = full_h / n, w = full_w / n;
    DisparityMap low{Tensor({batch, h, w}), Resolution::low};
    ValidMask low_mask = ValidMask::all({batch, h, w}, false);
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t y = 0; y < h; ++y)
            for (std::int64_t x = 0; x < w; ++x) {
                const std::int64_t src =
                    (b * full_h + nearest_source(y, h, full_h)) * full_w + nearest_source(x, w, full_w);
                const std::int64_t dst = (b * h + y) * w + x;
                low.values[dst] = gt.values[src];
                low_mask.flags[static_cast<std::size_t>(dst)] = mask[src] ? 1 : 0;
            }
    return {std::move(low), std::move(low_mask)};
}

std::vector<StageLabelVolume> stage_labels(const DisparityMap& gt_low, const ValidMask& mask_low, const Config& cfg) {
    require_rank(gt_low.values, 3, "low-resolution ground truth");
    require_mask(mask_low, gt_low.values, "low-resolution ground truth");
    const std::int64_t batch = gt_low.values.dim(0), plane = gt_low.values.dim(1) * gt_low.values.dim(2);
    for (std::int64_t i = 0; i < gt_low.values.numel(); ++i) {
        const real d = gt_low.values[i];
        if (mask_low[i] && !(d >= 0 && d < static_cast<real>(cfg.d_max)))
            throw RangeError("ground truth disparity " + std::to_string(d) + " outside [0, " +
                             std::to_string(cfg.d_max) + ")");
    }
    std::vector<StageLabelVolume> out;
    for (int i = 0; i < cfg.n; ++i) {
        StageLabelVolume label{Tensor({batch, cfg.k, gt_low.values.dim(1), gt_low.values.dim(2)}, real(1)), i};
        for (std::int64_t b = 0; b < batch; ++b)
            for (std::int64_t p = 0; p < plane; ++p) {
                if (!mask_low[b * plane + p]) continue;
                const double d = gt_low.values[b * plane + p];
                for (int m = 0; m < cfg.k; ++m) {
                    const double diff = m * cfg.n + i - d;
                    label.values[(b * cfg.k + m) * plane + p] = static_cast<real>(std::exp(-diff * diff));
                }
            }
        out.push_back(std::move(label));
    }
    return out;
}

Var stage_loss(std::span<const Var> scores, std::span<const StageLabelVolume> labels, const ValidMask& mask_low) {
    if (scores.size() != labels.size() || scores.empty())
        throw ShapeError("stage_loss needs one label volume per score volume");
    const std::int64_t valid = mask_low.count();
    if (valid == 0) throw MaskError("stage loss: no valid pixel");
    std::vector<Var> terms;
    for (std::size_t s = 0; s < scores.size(); ++s) {
        const Tensor& lab = labels[s].values;
        require_shape(lab, scores[s].shape(), "stage labels");
        require_rank(lab, 4, "stage labels");
        const std::int64_t batch = lab.dim(0), k = lab.dim(1), plane = lab.dim(2) * lab.dim(3);
        if (mask_low.size() != batch * plane) throw ShapeError("stage loss: mask does not match score volume");
        Tensor weights(lab.shape());
        for (std::int64_t b = 0; b < batch; ++b)
            for (std::int64_t p = 0; p < plane; ++p) {
                if (!mask_low[b * plane + p]) continue;
                double total = 0.0;
                for (std::int64_t m = 0; m < k; ++m) total += lab[(b * k + m) * plane + p];
                if (!(total > 0.0)) throw NumericError("stage labels sum to zero at a valid pixel");
                for (std::int64_t m = 0; m < k; ++m) {
                    const std::int64_t idx = (b * k + m) * plane + p;
                    weights[idx] = static_cast<real>(-lab[idx] / total / static_cast<double>(valid));
                }
            }
        terms.push_back(weighted_sum(log_softmax(scores[s]), std::move(weights)));
    }
    return add_all(terms);
}

Var l1_loss(const Var& pred, const DisparityMap& gt, const ValidMask& mask) {
    require_shape(gt.values, pred.shape(), "l1 ground truth");
    require_mask(mask, gt.values, "l1 ground truth");
    const std::int64_t valid = mask.count();
    if (valid == 0) throw MaskError("l1 loss: no valid pixel");
    const Tensor& p = pred.value();
    const double inv = 1.0 / static_cast<double>(valid);
    Tensor sign(p.shape());
    double acc = 0.0;
    for (std::int64_t i = 0; i < p.numel(); ++i) {
        if (!mask[i]) continue;
        const double e = static_cast<double>(p[i]) - static_cast<double>(gt.values[i]);
        acc += std::abs(e);
        sign[i] = static_cast<real>((e > 0 ? 1.0 : e < 0 ? -1.0 : 0.0) * inv);
    }
    return Var::make(Tensor({1}, {static_cast<real>(acc * inv)}), {pred}, [pred, sign](const Tensor& g, const Tensor&) {
        Tensor& gp = pred.grad_buffer();
        for (std::int64_t i = 0; i < gp.numel(); ++i) gp[i] += g[0] * sign[i];
    });
}

double l1_loss(const DisparityMap& pred, const DisparityMap& gt, const ValidMask& mask) {
    return l1_loss(Var(pred.values), gt, mask).item();
}

double total_loss(double l_stage, double l_1) {
    if (!std::isfinite(l_stage) || !std::isfinite(l_1))
        throw NumericError("non-finite loss term (stage " + std::to_string(l_stage) + ", l1 " + std::to_string(l_1) +
                           ")");
    return l_stage + l_1;
}

Var total_loss(const Var& l_stage, const Var& l_1) {
    total_loss(l_stage.item(), l_1.item());
    return add(l_stage, l_1);
}

MFM_NAMESPACE_END
