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

#include "mfm/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfm/data.hpp"
#include "mfm/errors.hpp"
#include "mfm/kernels.hpp"

MFM_NAMESPACE_BEGIN

Var soft_argmax(const Var& probabilities) {
    Tensor out = kernels::soft_argmax_forward(probabilities.value());
    return Var::make(std::move(out), {probabilities}, [probabilities](const Tensor& g, const Tensor&) {
        kernels::soft_argmax_backward(g, probabilities.grad_buffer());
    });
}

namespace {

void require_normalized(const FullCostVolume& volume) {
    if (!volume.normalized) throw StateError("cost volume must be normalized before regression");
    require_rank(volume.scores, 4, "cost volume");
}

}  // namespace

DisparityMap soft_argmax(const FullCostVolume& volume) {
    require_normalized(volume);
    return {kernels::soft_argmax_forward(volume.scores), Resolution::full};
}

double parabolic_offset(double left, double centre, double right) {
    const double denom = left - 2.0 * centre + right;
    if (std::abs(denom) < 1e-12) return 0.0;
    return std::clamp((left - right) / (2.0 * denom), -0.5, 0.5);
}

Tensor argmax_disparity(const FullCostVolume& volume) {
    require_rank(volume.scores, 4, "cost volume");
    const Tensor& s = volume.scores;
    const std::int64_t batch = s.dim(0), levels = s.dim(1), plane = s.dim(2) * s.dim(3);
    Tensor out({batch, s.dim(2), s.dim(3)});
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t p = 0; p < plane; ++p) {
            const real* col = s.data() + b * levels * plane + p;
            std::int64_t best = 0;
            for (std::int64_t d = 1; d < levels; ++d)
                if (col[d * plane] > col[best * plane]) best = d;
            out[b * plane + p] = static_cast<real>(best);
        }
    return out;
}

DisparityMap parabolic_subpixel(const FullCostVolume& volume) {
    require_normalized(volume);
    const Tensor& s = volume.scores;
    const std::int64_t levels = s.dim(1), plane = s.dim(2) * s.dim(3);
    if (levels < 3) throw RangeError("parabolic fitting needs at least 3 disparity levels");
    Tensor out = argmax_disparity(volume);
    const std::int64_t batch = s.dim(0);
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t p = 0; p < plane; ++p) {
            const real* col = s.data() + b * levels * plane + p;
            const auto peak = static_cast<std::int64_t>(out[b * plane + p]);
            if (peak == 0 || peak == levels - 1) continue;
            const double delta =
                parabolic_offset(col[(peak - 1) * plane], col[peak * plane], col[(peak + 1) * plane]);
            out[b * plane + p] = static_cast<real>(static_cast<double>(peak) + delta);
        }
    return {std::move(out), Resolution::full};
}

void write_disparity(const std::filesystem::path& path, const DisparityMap& disp, const ValidMask& mask) {
    if (mask.size() != disp.values.numel()) throw ShapeError("mask does not match disparity map");
    if (path.extension() == ".png") {
        write_disparity_png16(path, disp, mask);
        return;
    }
    Tensor values = disp.values;
    for (std::int64_t i = 0; i < values.numel(); ++i)
        if (!mask[i]) values[i] = std::numeric_limits<real>::infinity();
    write_pfm(path, values.reshaped({values.dim(-2), values.dim(-1)}));
}

MFM_NAMESPACE_END
