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

#include "mfm/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

double lr_at(int epoch, const TrainConfig& tc) {
    double lr = tc.base_lr;
    for (int m : tc.lr_milestones)
        if (epoch >= m) lr *= tc.lr_factor;
    return lr;
}

Checkpoint make_checkpoint(const Network& net, const Adam* adam, std::int64_t epoch, std::int64_t iteration) {
    Checkpoint c;
    c.config_text = format_config(net.config());
    c.config_hash = config_hash(net.config());
    c.epoch = epoch;
    c.iteration = iteration;
    for (const auto& e : net.parameters().entries()) c.parameters.emplace_back(e.name, e.var.value());
    if (adam != nullptr) {
        c.adam_steps = adam->steps();
        c.first_moments = adam->first_moments();
        c.second_moments = adam->second_moments();
    }
    return c;
}

void apply_checkpoint(const Checkpoint& ckpt, Network& net, Adam* adam) {
    if (ckpt.config_hash != config_hash(net.config()))
        throw StateError("checkpoint was written for a different architecture");
    const auto& entries = net.parameters().entries();
    if (ckpt.parameters.size() != entries.size())
        throw StateError("checkpoint holds " + std::to_string(ckpt.parameters.size()) + " parameters, network has " +
                         std::to_string(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& [name, value] = ckpt.parameters[i];
        if (name != entries[i].name) throw StateError("checkpoint parameter " + name + " != " + entries[i].name);
        Var v = entries[i].var;
        require_shape(value, v.shape(), name.c_str());
        v.mutable_value() = value;
    }
    if (adam != nullptr) {
        if (ckpt.first_moments.size() != entries.size() || ckpt.second_moments.size() != entries.size())
            throw StateError("checkpoint carries no optimizer state");
        adam->restore(ckpt.adam_steps, ckpt.first_moments, ckpt.second_moments);
    }
}

std::unique_ptr<Network> network_from_checkpoint(const Checkpoint& ckpt) {
    auto net = std::make_unique<Network>(parse_config(ckpt.config_text));
    apply_checkpoint(ckpt, *net, nullptr);
    return net;
}

namespace {

constexpr char kMagic[8] = {'M', 'F', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    template <class T>
    void put(T value) {
        char buf[sizeof(T)];
        std::memcpy(buf, &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
        bytes_.append(buf, sizeof(T));
    }
    void put_string(const std::string& s) {
        put<std::uint64_t>(s.size());
        bytes_ += s;
    }
    void put_tensor(const std::string& name, const Tensor& t) {
        put_string(name);
        put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
        for (std::int64_t d : t.shape()) put<std::int64_t>(d);
        for (real v : t.values()) put<real>(v);
    }
    [[nodiscard]] const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
};

class Reader {
public:
    Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

    template <class T>
    T get() {
        need(sizeof(T));
        char buf[sizeof(T)];
        std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }
    std::string get_string() {
        const auto n = get<std::uint64_t>();
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::pair<std::string, Tensor> get_tensor() {
        std::string name = get_string();
        const auto rank = get<std::uint32_t>();
        if (rank > 8) throw FormatError(path_ + ": bad tensor rank for " + name);
        Shape shape;
        for (std::uint32_t i = 0; i < rank; ++i) {
            shape.push_back(get<std::int64_t>());
            if (shape.back() < 0) throw FormatError(path_ + ": negative dimension for " + name);
        }
        need(static_cast<std::size_t>(shape_numel(shape)) * sizeof(real));
        Tensor t(shape);
        for (auto& v : t.values()) v = get<real>();
        return {std::move(name), std::move(t)};
    }
    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError("truncated checkpoint " + path_);
    }
    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    Writer w;
    for (char c : kMagic) w.put<char>(c);
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint32_t>(sizeof(real));
    w.put<std::uint64_t>(ckpt.config_hash);
    w.put<std::int64_t>(ckpt.epoch);
    w.put<std::int64_t>(ckpt.iteration);
    w.put<std::int64_t>(ckpt.adam_steps);
    w.put_string(ckpt.config_text);
    const bool moments = !ckpt.first_moments.empty();
    w.put<std::uint64_t>(ckpt.parameters.size() * (moments ? 3 : 1));
    for (const auto& [name, t] : ckpt.parameters) w.put_tensor(name, t);
    if (moments) {
        for (std::size_t i = 0; i < ckpt.parameters.size(); ++i)
            w.put_tensor("adam.m/" + ckpt.parameters[i].first, ckpt.first_moments.at(i));
        for (std::size_t i = 0; i < ckpt.parameters.size(); ++i)
            w.put_tensor("adam.v/" + ckpt.parameters[i].first, ckpt.second_moments.at(i));
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IOError("cannot write " + tmp.string());
        out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
        if (!out) throw IOError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open checkpoint " + path.string());
    Reader r(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()), path.string());
    for (char c : kMagic)
        if (r.get<char>() != c) throw FormatError(path.string() + " is not a checkpoint");
    if (const auto v = r.get<std::uint32_t>(); v != kVersion)
        throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(v));
    if (const auto bytes = r.get<std::uint32_t>(); bytes != sizeof(real))
        throw FormatError(path.string() + ": checkpoint stores " + std::to_string(bytes) +
                          "-byte reals, this build uses " + std::to_string(sizeof(real)));
    Checkpoint c;
    c.config_hash = r.get<std::uint64_t>();
    c.epoch = r.get<std::int64_t>();
    c.iteration = r.get<std::int64_t>();
    c.adam_steps = r.get<std::int64_t>();
    c.config_text = r.get_string();
    const auto blobs = r.get<std::uint64_t>();
    std::vector<std::pair<std::string, Tensor>> all;
    for (std::uint64_t i = 0; i < blobs; ++i) all.push_back(r.get_tensor());
    if (!r.done()) throw FormatError(path.string() + ": trailing bytes after checkpoint payload");
    for (auto& [name, t] : all) {
        if (name.starts_with("adam.m/")) c.first_moments.push_back(std::move(t));
        else if (name.starts_with("adam.v/")) c.second_moments.push_back(std::move(t));
        else c.parameters.emplace_back(std::move(name), std::move(t));
    }
    return c;
}

std::string format_iteration(const IterationLog& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%lld %.6f %.6f %.6f %.6g", static_cast<long long>(e.iteration), e.loss, e.l1,
                  e.lstage, e.lr);
    return buf;
}

namespace {

void require_full_coverage(const ParameterStore& store, const Adam& adam) {
    std::multiset<const void*> tracked;
    for (const Var& v : adam.parameters()) tracked.insert(v.id());
    for (const auto& e : store.entries()) {
        if (!e.var.requires_grad()) throw StateError("parameter " + e.name + " does not require gradients");
        if (tracked.count(e.var.id()) != 1) throw StateError("parameter " + e.name + " is not optimized exactly once");
    }
    if (tracked.size() != store.entries().size()) throw StateError("optimizer tracks foreign tensors");
}

std::string format_metrics(std::int64_t epoch, const Metrics& m) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "epoch %lld epe %.6f bad1 %.6f bad3 %.6f d1 %.6f", static_cast<long long>(epoch),
                  m.epe, m.bad1, m.bad3, m.d1);
    return buf;
}

}  // namespace

TrainResult train_loop(Network& net, std::span<const Sample> dataset, const TrainOptions& options) {
    if (dataset.empty()) throw RangeError("train_loop: empty dataset");
    const Config& cfg = net.config();
    const TrainConfig& tc = cfg.train;
    ParameterStore& store = net.parameters();
    Adam adam(store, tc.beta1, tc.beta2, tc.adam_eps);
    require_full_coverage(store, adam);

    std::int64_t start_epoch = 0, iteration = 0;
    if (!options.resume.empty()) {
        const Checkpoint ckpt = load_checkpoint(options.resume);
        apply_checkpoint(ckpt, net, &adam);
        start_epoch = ckpt.epoch;
        iteration = ckpt.iteration;
    }

    const std::int64_t h = dataset[0].pair.height(), w = dataset[0].pair.width();
    const int crop_h = tc.crop_h > 0 ? tc.crop_h : static_cast<int>(h);
    const int crop_w = tc.crop_w > 0 ? tc.crop_w : static_cast<int>(w);
    const auto count = static_cast<std::int64_t>(dataset.size());
    const std::int64_t batch_size = std::min<std::int64_t>(tc.batch_size, count);
    const std::int64_t batches = count / batch_size;
    const std::filesystem::path ckpt_dir = tc.checkpoint_dir;

    TrainResult result;
    std::int64_t epoch = start_epoch;
    bool stop = tc.max_iterations > 0 && iteration >= tc.max_iterations;
    auto evaluate_now = [&](std::int64_t completed) {
        const Metrics m = evaluate_network(net, dataset, static_cast<int>(batch_size));
        result.evaluations.push_back({completed, m});
        if (options.metrics_log) *options.metrics_log << format_metrics(completed, m) << std::endl;
    };

    for (; epoch < tc.epochs && !stop; ++epoch) {
        const double lr = lr_at(static_cast<int>(epoch), tc);
        std::vector<std::int64_t> order(static_cast<std::size_t>(count));
        std::iota(order.begin(), order.end(), 0);
        std::seed_seq order_seed{static_cast<std::uint32_t>(tc.seed), static_cast<std::uint32_t>(tc.seed >> 32),
                                 static_cast<std::uint32_t>(epoch), 0x6f72U};
        std::mt19937_64 order_rng(order_seed);
        std::shuffle(order.begin(), order.end(), order_rng);

        for (std::int64_t b = 0; b < batches; ++b) {
            if (tc.max_iterations > 0 && iteration >= tc.max_iterations) {
                stop = true;
                break;
            }
            std::vector<Sample> picked;
            for (std::int64_t j = b * batch_size; j < (b + 1) * batch_size; ++j)
                picked.push_back(dataset[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]);
            const std::uint64_t crop_seed = tc.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(iteration + 1));
            const Sample batch = make_batch(picked, crop_h, crop_w, crop_seed, cfg.n);

            store.zero_grad();
            LossTerms terms;
            try {
                terms = net.loss(net.forward(batch.pair), batch);
            } catch (const NumericError& e) {
                std::ostringstream ids;
                for (std::int64_t j = b * batch_size; j < (b + 1) * batch_size; ++j)
                    ids << (j > b * batch_size ? "," : "") << order[static_cast<std::size_t>(j)];
                const std::string what = "non-finite loss at iteration " + std::to_string(iteration + 1) +
                                         " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                                         ", samples " + ids.str() + "): " + e.what();
                if (!ckpt_dir.empty()) {
                    std::filesystem::create_directories(ckpt_dir);
                    std::ofstream(ckpt_dir / "nonfinite_batch.txt") << what << '\n';
                }
                throw NumericError(what);
            }
            terms.total.backward();
            adam.step(lr);
            ++iteration;

            IterationLog entry{iteration, terms.total.item(), terms.l1.item(),
                               terms.stage.defined() ? terms.stage.item() : 0.0, lr};
            result.iterations.push_back(entry);
            if (options.log) *options.log << format_iteration(entry) << '\n';
            if (options.on_iteration) options.on_iteration(entry);
        }
        if (stop) break;
        const std::int64_t completed = epoch + 1;
        if (tc.eval_every > 0 && completed % tc.eval_every == 0) evaluate_now(completed);
        if (options.save_checkpoints && !ckpt_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "epoch_%04lld.ckpt", static_cast<long long>(completed));
            save_checkpoint(ckpt_dir / name, make_checkpoint(net, &adam, completed, iteration));
        }
    }
    if (options.log) options.log->flush();
    if (result.evaluations.empty() || result.evaluations.back().epoch != epoch) evaluate_now(epoch);
    result.checkpoint = make_checkpoint(net, &adam, epoch, iteration);
    if (options.save_checkpoints && !ckpt_dir.empty()) save_checkpoint(ckpt_dir / "final.ckpt", result.checkpoint);
    return result;
}

std::vector<Sample> training_dataset(const Config& cfg) {
    const TrainConfig& tc = cfg.train;
    if (!tc.data_dir.empty()) {
        std::vector<Sample> samples = load_dataset(tc.data_dir);
        if (samples.empty()) throw IOError("no samples found in " + tc.data_dir);
        return samples;
    }
    if (tc.rds_height % cfg.n != 0 || tc.rds_width % cfg.n != 0)
        throw DivisibilityError("rds_height and rds_width must be divisible by n=" + std::to_string(cfg.n));
    const RdsDistribution dist = RdsDistribution::for_size(tc.rds_height, tc.rds_width, cfg.d_max);
    return make_rds_dataset(dist, tc.rds_count, tc.rds_seed);
}

MFM_NAMESPACE_END
