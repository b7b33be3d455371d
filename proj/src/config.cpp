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

#include "mfm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
    return value;
}

std::vector<int> parse_int_list(std::string_view key, std::string_view text) {
    std::vector<int> out;
    if (trim(text).empty()) return out;
    while (true) {
        const auto comma = text.find(',');
        out.push_back(parse_number<int>(key, trim(text.substr(0, comma))));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

void require_positive(int value, const char* name) {
    if (value <= 0) throw RangeError(std::string(name) + " must be positive, got " + std::to_string(value));
}

using Setter = std::function<void(Config&, std::string_view key, std::string_view value)>;

template <class T>
Setter number_setter(T Config::*field) {
    return [field](Config& c, std::string_view key, std::string_view v) { c.*field = parse_number<T>(key, v); };
}

template <class T>
Setter train_setter(T TrainConfig::*field) {
    return [field](Config& c, std::string_view key, std::string_view v) {
        c.train.*field = parse_number<T>(key, v);
    };
}

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"D_max", number_setter(&Config::d_max)},
        {"n", number_setter(&Config::n)},
        {"k", number_setter(&Config::k)},
        {"feat_channels", number_setter(&Config::feat_channels)},
        {"gwc_groups", number_setter(&Config::gwc_groups)},
        {"cat_channels", number_setter(&Config::cat_channels)},
        {"vol_channels", number_setter(&Config::vol_channels)},
        {"stem_channels", number_setter(&Config::stem_channels)},
        {"res_blocks", number_setter(&Config::res_blocks)},
        {"variant", [](Config& c, std::string_view, std::string_view v) { c.variant = parse_variant(v); }},
        {"beta1", train_setter(&TrainConfig::beta1)},
        {"beta2", train_setter(&TrainConfig::beta2)},
        {"adam_eps", train_setter(&TrainConfig::adam_eps)},
        {"batch_size", train_setter(&TrainConfig::batch_size)},
        {"base_lr", train_setter(&TrainConfig::base_lr)},
        {"lr_milestones",
         [](Config& c, std::string_view key, std::string_view v) { c.train.lr_milestones = parse_int_list(key, v); }},
        {"lr_factor", train_setter(&TrainConfig::lr_factor)},
        {"epochs", train_setter(&TrainConfig::epochs)},
        {"seed", train_setter(&TrainConfig::seed)},
        {"checkpoint_dir",
         [](Config& c, std::string_view, std::string_view v) { c.train.checkpoint_dir = std::string(v); }},
        {"max_iterations", train_setter(&TrainConfig::max_iterations)},
        {"eval_every", train_setter(&TrainConfig::eval_every)},
        {"crop_h", train_setter(&TrainConfig::crop_h)},
        {"crop_w", train_setter(&TrainConfig::crop_w)},
        {"data_dir", [](Config& c, std::string_view, std::string_view v) { c.train.data_dir = std::string(v); }},
        {"rds_count", train_setter(&TrainConfig::rds_count)},
        {"rds_height", train_setter(&TrainConfig::rds_height)},
        {"rds_width", train_setter(&TrainConfig::rds_width)},
        {"rds_seed", train_setter(&TrainConfig::rds_seed)},
    };
    return table;
}

}  // namespace

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::decouple: return "decouple";
        case Variant::multistage: return "multistage";
        case Variant::full: return "full";
    }
    return "full";
}

Variant parse_variant(std::string_view name) {
    for (auto v : {Variant::baseline, Variant::decouple, Variant::multistage, Variant::full})
        if (variant_name(v) == name) return v;
    throw ConfigError("unknown variant '" + std::string(name) + "'");
}

Config validate_config(const Config& cfg) {
    require_positive(cfg.d_max, "D_max");
    require_positive(cfg.n, "n");
    require_positive(cfg.k, "k");
    require_positive(cfg.feat_channels, "feat_channels");
    require_positive(cfg.gwc_groups, "gwc_groups");
    require_positive(cfg.cat_channels, "cat_channels");
    require_positive(cfg.vol_channels, "vol_channels");
    require_positive(cfg.stem_channels, "stem_channels");
    if (cfg.res_blocks < 0) throw RangeError("res_blocks must be non-negative");
    if (cfg.n < 2) throw RangeError("n must be at least 2, got " + std::to_string(cfg.n));
    if (cfg.d_max % cfg.n != 0)
        throw DivisibilityError("D_max=" + std::to_string(cfg.d_max) + " is not divisible by n=" +
                                std::to_string(cfg.n));
    if (cfg.k != cfg.d_max / cfg.n)
        throw DivisibilityError("k=" + std::to_string(cfg.k) + " must equal D_max/n=" +
                                std::to_string(cfg.d_max / cfg.n));
    if (cfg.feat_channels % cfg.gwc_groups != 0)
        throw DivisibilityError("gwc_groups=" + std::to_string(cfg.gwc_groups) + " does not divide feat_channels=" +
                                std::to_string(cfg.feat_channels));

    const auto& t = cfg.train;
    if (!(t.beta1 >= 0.0 && t.beta1 < 1.0) || !(t.beta2 >= 0.0 && t.beta2 < 1.0))
        throw RangeError("Adam betas must lie in [0, 1)");
    if (!(t.adam_eps > 0.0)) throw RangeError("adam_eps must be positive");
    require_positive(t.batch_size, "batch_size");
    require_positive(t.epochs, "epochs");
    if (!(t.base_lr > 0.0)) throw RangeError("base_lr must be positive");
    if (!(t.lr_factor > 0.0 && t.lr_factor <= 1.0)) throw RangeError("lr_factor must lie in (0, 1]");
    for (std::size_t i = 0; i < t.lr_milestones.size(); ++i) {
        if (t.lr_milestones[i] < 0) throw RangeError("lr_milestones must be non-negative");
        if (i > 0 && t.lr_milestones[i] <= t.lr_milestones[i - 1])
            throw RangeError("lr_milestones must be strictly increasing");
    }
    if (t.max_iterations < 0) throw RangeError("max_iterations must be non-negative");
    if (t.eval_every < 0) throw RangeError("eval_every must be non-negative");
    if (t.crop_h < 0 || t.crop_w < 0) throw RangeError("crop sizes must be non-negative");
    if (t.crop_h % cfg.n != 0 || t.crop_w % cfg.n != 0)
        throw DivisibilityError("crop sizes must be divisible by n");
    require_positive(t.rds_count, "rds_count");
    require_positive(t.rds_height, "rds_height");
    require_positive(t.rds_width, "rds_width");
    return cfg;
}

Config preset(std::string_view name) {
    Config c;
    if (name == "desk") return c;
    if (name == "tiny") {
        c.d_max = 8;
        c.n = 2;
        c.k = 4;
        c.feat_channels = 16;
        c.gwc_groups = 4;
        c.cat_channels = 4;
        c.vol_channels = 8;
        c.stem_channels = 8;
        c.train.batch_size = 1;
        c.train.rds_count = 4;
        c.train.rds_height = 32;
        c.train.rds_width = 48;
        return c;
    }
    if (name == "scene_flow" || name == "kitti") {
        c.d_max = 192;
        c.n = 4;
        c.k = 48;
        c.feat_channels = 320;
        c.gwc_groups = 40;
        c.cat_channels = 12;
        c.vol_channels = 32;
        c.stem_channels = 32;
        c.res_blocks = 2;
        c.train.batch_size = 8;
        c.train.crop_h = 256;
        c.train.crop_w = 512;
        c.train.rds_height = 256;
        c.train.rds_width = 512;
        if (name == "scene_flow") {
            c.train.epochs = 16;
            c.train.lr_milestones = {10, 12, 14};
            c.train.lr_factor = 0.5;
        } else {
            c.train.epochs = 300;
            c.train.lr_milestones = {210};
            c.train.lr_factor = 0.1;
        }
        return c;
    }
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

Config parse_config(std::string_view text) {
    Config cfg;
    bool k_given = false;
    bool first_entry = true;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key == "preset") {
            if (!first_entry) throw ConfigError("'preset' must be the first entry of a config file");
            cfg = preset(value);
            first_entry = false;
            continue;
        }
        first_entry = false;
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
        it->second(cfg, key, value);
        if (key == "k") k_given = true;
    }
    if (!k_given && cfg.n > 0) cfg.k = cfg.d_max / cfg.n;
    return validate_config(cfg);
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const Config& c) {
    std::ostringstream os;
    os.precision(17);
    os << "D_max = " << c.d_max << '\n'
       << "n = " << c.n << '\n'
       << "k = " << c.k << '\n'
       << "feat_channels = " << c.feat_channels << '\n'
       << "gwc_groups = " << c.gwc_groups << '\n'
       << "cat_channels = " << c.cat_channels << '\n'
       << "vol_channels = " << c.vol_channels << '\n'
       << "stem_channels = " << c.stem_channels << '\n'
       << "res_blocks = " << c.res_blocks << '\n'
       << "variant = " << variant_name(c.variant) << '\n';
    const auto& t = c.train;
    os << "beta1 = " << t.beta1 << '\n'
       << "beta2 = " << t.beta2 << '\n'
       << "adam_eps = " << t.adam_eps << '\n'
       << "batch_size = " << t.batch_size << '\n'
       << "base_lr = " << t.base_lr << '\n'
       << "lr_milestones = ";
    for (std::size_t i = 0; i < t.lr_milestones.size(); ++i) os << (i ? "," : "") << t.lr_milestones[i];
    os << '\n'
       << "lr_factor = " << t.lr_factor << '\n'
       << "epochs = " << t.epochs << '\n'
       << "seed = " << t.seed << '\n'
       << "checkpoint_dir = " << t.checkpoint_dir << '\n'
       << "max_iterations = " << t.max_iterations << '\n'
       << "eval_every = " << t.eval_every << '\n'
       << "crop_h = " << t.crop_h << '\n'
       << "crop_w = " << t.crop_w << '\n'
       << "data_dir = " << t.data_dir << '\n'
       << "rds_count = " << t.rds_count << '\n'
       << "rds_height = " << t.rds_height << '\n'
       << "rds_width = " << t.rds_width << '\n'
       << "rds_seed = " << t.rds_seed << '\n';
    return os.str();
}

std::uint64_t config_hash(const Config& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::int64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= static_cast<std::uint64_t>(v >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    };
    for (std::int64_t v : {c.d_max, c.n, c.k, c.feat_channels, c.gwc_groups, c.cat_channels, c.vol_channels,
                           c.stem_channels, c.res_blocks, static_cast<int>(c.variant)})
        mix(v);
    return h;
}

CellIndex split_disparity(int d, int n) {
    if (n <= 0 || d < 0) throw RangeError("split_disparity: need d >= 0 and n > 0");
    return {d / n, d % n};
}

int join_disparity(CellIndex index, int n) {
    if (index.stage < 0 || index.stage >= n || index.cell < 0)
        throw RangeError("join_disparity: stage must lie in [0, n) and cell must be non-negative");
    return index.cell * n + index.stage;
}

MFM_NAMESPACE_END
