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

#include "mfm/assembly.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "mfm/errors.hpp"
#include "mfm/kernels.hpp"

MFM_NAMESPACE_BEGIN

Var upsample_stage(const Var& p, std::int64_t height, std::int64_t width) {
    const Shape& s = p.shape();
    if (s.size() != 4) throw ShapeError("stage volume must be [B,k,h,w], got " + shape_str(s));
    if (height % s[2] != 0 || width % s[3] != 0 || height / s[2] != width / s[3])
        throw ShapeError("cannot upsample " + std::to_string(s[2]) + "x" + std::to_string(s[3]) + " to " +
                         std::to_string(height) + "x" + std::to_string(width) + " by one integer ratio");
    Tensor out = kernels::bilinear_forward(p.value(), height, width);
    return Var::make(std::move(out), {p}, [p](const Tensor& g, const Tensor&) {
        kernels::bilinear_backward(g, p.grad_buffer());
    });
}

namespace {

void check_arity(std::size_t count, int n) {
    if (n <= 0 || count != static_cast<std::size_t>(n))
        throw ArityError("interleave expects " + std::to_string(n) + " stage volumes, got " + std::to_string(count));
}

}  // namespace

Var interleave(std::span<const Var> stages, int n) {
    check_arity(stages.size(), n);
    std::vector<const Tensor*> values;
    std::vector<Var> parents(stages.begin(), stages.end());
    for (const Var& s : stages) values.push_back(&s.value());
    Tensor out = kernels::interleave_forward(values);
    return Var::make(std::move(out), parents, [parents, n](const Tensor& g, const Tensor&) {
        std::vector<Tensor> parts = kernels::deinterleave(g, n);
        for (std::size_t i = 0; i < parents.size(); ++i)
            if (parents[i].requires_grad()) parents[i].grad_buffer().add_(parts[i]);
    });
}

FullCostVolume interleave(std::span<const Tensor> stages, int n) {
    check_arity(stages.size(), n);
    std::vector<const Tensor*> values;
    for (const Tensor& s : stages) values.push_back(&s);
    return {kernels::interleave_forward(values), false};
}

std::vector<Tensor> deinterleave(const FullCostVolume& volume, int n) { return kernels::deinterleave(volume.scores, n); }

Var disparity_lerp(const Var& p, int n, int d_max) {
    Tensor out = kernels::disparity_lerp_forward(p.value(), n, d_max);
    return Var::make(std::move(out), {p}, [p, n](const Tensor& g, const Tensor&) {
        kernels::disparity_lerp_backward(g, n, p.grad_buffer());
    });
}

namespace {

void require_finite(const Tensor& t) {
    for (std::int64_t i = 0; i < t.numel(); ++i)
        if (!std::isfinite(t[i])) throw NumericError("non-finite score at flat index " + std::to_string(i));
}

}  // namespace

Var normalize(const Var& scores) {
    require_rank(scores.value(), 4, "cost volume");
    require_finite(scores.value());
    return softmax(scores);
}

FullCostVolume normalize(const FullCostVolume& volume) {
    require_rank(volume.scores, 4, "cost volume");
    require_finite(volume.scores);
    return {kernels::softmax_forward(volume.scores), true};
}

namespace {

constexpr char kMagic[4] = {'M', 'F', 'M', 'V'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos, const std::string& path) {
    if (in.size() - pos < sizeof(T)) throw FormatError("truncated cost volume file " + path);
    char buf[sizeof(T)];
    std::memcpy(buf, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos += sizeof(T);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

}  // namespace

void write_cost_volume(const std::filesystem::path& path, const FullCostVolume& volume) {
    std::string out(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, sizeof(float));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(volume.scores.rank()));
    for (std::int64_t d : volume.scores.shape()) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    put<std::uint8_t>(out, volume.normalized ? 1 : 0);
    for (real v : volume.scores.values()) put<float>(out, static_cast<float>(v));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IOError("cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IOError("write failed for " + path.string());
}

FullCostVolume read_cost_volume(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IOError("cannot open " + path.string());
    const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::string p = path.string();
    if (in.size() < 4 || std::memcmp(in.data(), kMagic, 4) != 0) throw FormatError(p + " is not a cost volume file");
    std::size_t pos = 4;
    if (take<std::uint32_t>(in, pos, p) != kVersion) throw FormatError(p + ": unsupported cost volume version");
    if (take<std::uint32_t>(in, pos, p) != sizeof(float)) throw FormatError(p + ": unsupported element size");
    const auto rank = take<std::uint32_t>(in, pos, p);
    if (rank == 0 || rank > 8) throw FormatError(p + ": bad rank");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<std::int64_t>(take<std::uint64_t>(in, pos, p)));
    const bool normalized = take<std::uint8_t>(in, pos, p) != 0;
    if ((in.size() - pos) / sizeof(float) != static_cast<std::size_t>(shape_numel(shape)))
        throw FormatError(p + ": payload size does not match dims");
    Tensor scores(shape);
    for (auto& v : scores.values()) v = static_cast<real>(take<float>(in, pos, p));
    return {std::move(scores), normalized};
}

MFM_NAMESPACE_END
