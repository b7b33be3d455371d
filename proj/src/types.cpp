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

#include "mfm/types.hpp"

#include <algorithm>
#include <string>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

void check_pair(const ImagePair& pair, int n) {
    require_rank(pair.left, 4, "left image");
    if (pair.left.dim(1) != 3) throw ShapeError("images must have 3 channels, got shape " + shape_str(pair.left.shape()));
    require_shape(pair.right, pair.left.shape(), "right image");
    if (pair.height() % n != 0 || pair.width() % n != 0)
        throw ShapeError("image size " + std::to_string(pair.height()) + "x" + std::to_string(pair.width()) +
                         " is not divisible by n=" + std::to_string(n));
}

ValidMask ValidMask::all(const Shape& shape, bool value) {
    return ValidMask{shape, std::vector<std::uint8_t>(static_cast<std::size_t>(shape_numel(shape)), value ? 1 : 0)};
}

std::int64_t ValidMask::count() const {
    return std::count_if(flags.begin(), flags.end(), [](std::uint8_t f) { return f != 0; });
}

MFM_NAMESPACE_END
