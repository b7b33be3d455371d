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
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mfm/autograd.hpp"

MFM_NAMESPACE_BEGIN

using Rng = std::mt19937_64;

struct NamedParameter {
    std::string name;
    Var var;
};

/// Ordered registry of learnable tensors. Names are unique and dot-separated,
/// with the owning module as the first component (e.g. `aggregation.stage2.down1.weight`).
class ParameterStore {
public:
    Var add(std::string name, Tensor init);

    [[nodiscard]] const std::vector<NamedParameter>& entries() const noexcept { return entries_; }
    [[nodiscard]] Var get(std::string_view name) const;
    [[nodiscard]] std::int64_t numel() const;
    void zero_grad();

private:
    std::vector<NamedParameter> entries_;
};

/// Convolution with learnable weight [Co,Ci,KD,KH,KW] and bias [Co].
/// 2-D layers use KD = 1 and accept [B,C,H,W] inputs.
struct ConvLayer {
    Var weight;
    Var bias;
    kernels::ConvGeometry geometry;
    bool planar = false;

    Var operator()(const Var& x) const;
};

/// Fan-in scaled uniform initialisation, zero bias.
ConvLayer make_conv3d(ParameterStore& store, const std::string& name, int in_channels, int out_channels, int kernel,
                      int stride, Rng& rng);
ConvLayer make_conv2d(ParameterStore& store, const std::string& name, int in_channels, int out_channels, int kernel,
                      int stride, Rng& rng);

inline constexpr real kLeakySlope = real(0.1);

inline Var activate(const Var& x) { return leaky_relu(x, kLeakySlope); }

/// Adam with bias correction. Moments are indexed like the store's entries.
class Adam {
public:
    Adam(const ParameterStore& store, double beta1, double beta2, double eps);

    void step(double lr);

    [[nodiscard]] const std::vector<Var>& parameters() const noexcept { return params_; }
    [[nodiscard]] std::int64_t steps() const noexcept { return steps_; }
    [[nodiscard]] const std::vector<Tensor>& first_moments() const noexcept { return m_; }
    [[nodiscard]] const std::vector<Tensor>& second_moments() const noexcept { return v_; }
    void restore(std::int64_t steps, std::vector<Tensor> m, std::vector<Tensor> v);

private:
    std::vector<Var> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    double beta1_, beta2_, eps_;
    std::int64_t steps_ = 0;
};

MFM_NAMESPACE_END
