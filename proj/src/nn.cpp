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

#include "mfm/nn.hpp"

#include <cmath>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

Var ParameterStore::add(std::string name, Tensor init) {
    for (const auto& e : entries_)
        if (e.name == name) throw StateError("duplicate parameter name " + name);
    Var v(std::move(init), true);
    entries_.push_back({std::move(name), v});
    return v;
}

Var ParameterStore::get(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e.var;
    throw IndexError("no parameter named " + std::string(name));
}

std::int64_t ParameterStore::numel() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.var.value().numel();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& e : entries_) e.var.zero_grad();
}

Var ConvLayer::operator()(const Var& x) const {
    if (!planar) return conv(x, weight, bias, geometry);
    const Shape& s = x.shape();
    if (s.size() != 4) throw ShapeError("2-d convolution expects [B,C,H,W], got " + shape_str(s));
    Var y = conv(reshape(x, {s[0], s[1], 1, s[2], s[3]}), weight, bias, geometry);
    const Shape& o = y.shape();
    return reshape(y, {o[0], o[1], o[3], o[4]});
}

namespace {

ConvLayer make_conv(ParameterStore& store, const std::string& name, int cin, int cout, std::array<int, 3> kernel,
                    int stride, bool planar, Rng& rng) {
    if (cin <= 0 || cout <= 0) throw RangeError("layer " + name + ": channel counts must be positive");
    const Shape wshape{cout, cin, kernel[0], kernel[1], kernel[2]};
    const double fan_in = static_cast<double>(cin) * kernel[0] * kernel[1] * kernel[2];
    const double bound = std::sqrt(6.0 / fan_in) / std::sqrt(1.0 + static_cast<double>(kLeakySlope * kLeakySlope));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w(wshape);
    for (auto& v : w.values()) v = static_cast<real>(dist(rng));

    ConvLayer layer;
    layer.weight = store.add(name + ".weight", std::move(w));
    layer.bias = store.add(name + ".bias", Tensor({cout}));
    layer.planar = planar;
    for (int a = 0; a < 3; ++a) {
        layer.geometry.kernel[a] = kernel[a];
        layer.geometry.pad[a] = kernel[a] / 2;
        layer.geometry.stride[a] = planar && a == 0 ? 1 : stride;
    }
    return layer;
}

}  // namespace

ConvLayer make_conv3d(ParameterStore& store, const std::string& name, int in_channels, int out_channels, int kernel,
                      int stride, Rng& rng) {
    return make_conv(store, name, in_channels, out_channels, {kernel, kernel, kernel}, stride, false, rng);
}

ConvLayer make_conv2d(ParameterStore& store, const std::string& name, int in_channels, int out_channels, int kernel,
                      int stride, Rng& rng) {
    return make_conv(store, name, in_channels, out_channels, {1, kernel, kernel}, stride, true, rng);
}

Adam::Adam(const ParameterStore& store, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& e : store.entries()) {
        params_.push_back(e.var);
        m_.emplace_back(e.var.shape());
        v_.emplace_back(e.var.shape());
    }
}

void Adam::step(double lr) {
    ++steps_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Var& p = params_[i];
        if (!p.has_grad()) continue;
        const Tensor g = p.grad();
        Tensor& w = p.mutable_value();
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::int64_t j = 0; j < w.numel(); ++j) {
            const double gj = g[j];
            const double mj = beta1_ * m[j] + (1.0 - beta1_) * gj;
            const double vj = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
            m[j] = static_cast<real>(mj);
            v[j] = static_cast<real>(vj);
            w[j] -= static_cast<real>(lr * (mj / c1) / (std::sqrt(vj / c2) + eps_));
        }
    }
}

void Adam::restore(std::int64_t steps, std::vector<Tensor> m, std::vector<Tensor> v) {
    if (m.size() != params_.size() || v.size() != params_.size())
        throw StateError("Adam::restore: moment count does not match parameter count");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        require_shape(m[i], params_[i].shape(), "Adam first moment");
        require_shape(v[i], params_[i].shape(), "Adam second moment");
    }
    steps_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
}

MFM_NAMESPACE_END
