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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "mfm/autograd.hpp"
#include "mfm/tensor.hpp"
#include "mfm/types.hpp"

namespace mfm_test {

using mfm::real;
using mfm::Shape;
using mfm::Tensor;

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Tensor t(shape);
    for (auto& v : t.values()) v = static_cast<real>(dist(rng));
    return t;
}

inline mfm::ValidMask random_mask(const Shape& shape, std::mt19937_64& rng, double p_valid = 0.8) {
    std::bernoulli_distribution keep(p_valid);
    mfm::ValidMask m = mfm::ValidMask::all(shape, false);
    for (auto& f : m.flags) f = keep(rng) ? 1 : 0;
    m.flags[0] = 1;
    return m;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Scalar probe sum(x * w) for driving backward passes with a fixed cotangent.
inline mfm::Var dot(const mfm::Var& x, const Tensor& w) {
    mfm::require_shape(w, x.shape(), "dot weights");
    double acc = 0.0;
    for (std::int64_t i = 0; i < w.numel(); ++i) acc += static_cast<double>(x.value()[i]) * w[i];
    return mfm::Var::make(Tensor({1}, static_cast<real>(acc)), {x}, [x, w](const Tensor& g, const Tensor&) {
        Tensor& gx = x.grad_buffer();
        for (std::int64_t i = 0; i < w.numel(); ++i) gx[i] += g[0] * w[i];
    });
}

inline real max_abs(const Tensor& t) {
    real m = 0;
    for (real v : t.values()) m = std::max(m, std::abs(v));
    return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("mfm_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace mfm_test
