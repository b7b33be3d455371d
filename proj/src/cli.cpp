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

#include "mfm/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "mfm/ablation.hpp"
#include "mfm/assembly.hpp"
#include "mfm/errors.hpp"
#include "mfm/eval.hpp"
#include "mfm/kernels.hpp"
#include "mfm/regression.hpp"
#include "mfm/train.hpp"

MFM_NAMESPACE_BEGIN

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void print_metrics(std::ostream& out, const Metrics& m) {
    out << "EPE " << fixed(m.epe) << '\n'
        << ">1px " << fixed(100.0 * m.bad1, 2) << "%\n"
        << ">3px " << fixed(100.0 * m.bad3, 2) << "%\n"
        << "D1 " << fixed(100.0 * m.d1, 2) << "%\n"
        << "pixels " << m.pixels << '\n';
}

std::pair<DisparityMap, ValidMask> read_disparity(const fs::path& path) {
    if (path.extension() == ".png") return read_disparity_png16(path);
    PfmImage img = read_pfm(path);
    const std::int64_t h = img.values.dim(0), w = img.values.dim(1);
    DisparityMap d{img.values.reshaped({1, h, w}), Resolution::full};
    ValidMask mask = ValidMask::all({1, h, w}, false);
    for (std::int64_t i = 0; i < h * w; ++i) {
        const bool ok = std::isfinite(d.values[i]) && d.values[i] >= 0;
        mask.flags[static_cast<std::size_t>(i)] = ok ? 1 : 0;
        if (!ok) d.values[i] = 0;
    }
    return {std::move(d), std::move(mask)};
}

struct Accumulator {
    double abs = 0, bad1 = 0, bad3 = 0, d1 = 0;
    std::int64_t pixels = 0;

    void add(const Metrics& m) {
        const auto v = static_cast<double>(m.pixels);
        abs += m.epe * v;
        bad1 += m.bad1 * v;
        bad3 += m.bad3 * v;
        d1 += m.d1 * v;
        pixels += m.pixels;
    }
    [[nodiscard]] Metrics result() const {
        if (pixels == 0) throw MaskError("no valid pixel to evaluate");
        const auto p = static_cast<double>(pixels);
        return {abs / p, bad1 / p, bad3 / p, d1 / p, pixels};
    }
};

std::string stem_of(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06d", index);
    return buf;
}

int cmd_gen_data(const fs::path& spec_path, const fs::path& out_dir, int count, std::uint64_t seed,
                 std::ostream& out) {
    if (count <= 0) throw RangeError("--count must be positive");
    const GeneratorSpec gen = parse_generator_spec(read_text(spec_path));
    for (int i = 0; i < count; ++i) save_sample(out_dir, i, gen_rds(generator_spec_at(gen, seed, i)));
    out << "wrote " << count << " samples to " << out_dir.string() << '\n';
    return kExitOk;
}

int cmd_train(const fs::path& config_path, const std::optional<fs::path>& resume, std::ostream& out) {
    const Config cfg = load_config(config_path);
    const std::vector<Sample> data = training_dataset(cfg);
    Network net(cfg);
    TrainOptions options;
    std::ofstream log_file, metrics_file;
    std::ostringstream metrics_text;
    if (!cfg.train.checkpoint_dir.empty()) {
        fs::create_directories(cfg.train.checkpoint_dir);
        log_file.open(fs::path(cfg.train.checkpoint_dir) / "train.log", resume ? std::ios::app : std::ios::trunc);
        metrics_file.open(fs::path(cfg.train.checkpoint_dir) / "metrics.log", resume ? std::ios::app : std::ios::trunc);
    }
    options.on_iteration = [&](const IterationLog& e) {
        const std::string line = format_iteration(e);
        out << line << '\n';
        if (log_file.is_open()) log_file << line << '\n';
    };
    options.metrics_log = metrics_file.is_open() ? static_cast<std::ostream*>(&metrics_file) : &metrics_text;
    if (resume) options.resume = *resume;
    const TrainResult result = train_loop(net, data, options);
    out << "trained " << result.checkpoint.iteration << " iterations over " << result.checkpoint.epoch
        << " epochs on " << data.size() << " samples\n";
    print_metrics(out, result.evaluations.back().metrics);
    if (cfg.train.checkpoint_dir.empty()) out << "checkpoint_dir is empty; no checkpoint written\n";
    else out << "checkpoint " << (fs::path(cfg.train.checkpoint_dir) / "final.ckpt").string() << '\n';
    return kExitOk;
}

std::unique_ptr<Network> load_network(const fs::path& ckpt_path, const std::optional<fs::path>& config_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (config_path) {
        const Config cfg = load_config(*config_path);
        if (config_hash(cfg) != ckpt.config_hash)
            throw ConfigError("config " + config_path->string() + " does not match the checkpoint architecture");
    }
    return network_from_checkpoint(ckpt);
}

int cmd_eval(const std::optional<fs::path>& config_path, const std::optional<fs::path>& ckpt_path,
             const fs::path& data_dir, const std::optional<fs::path>& pred_dir, const std::optional<fs::path>& dump,
             const std::optional<fs::path>& error_maps, std::ostream& out) {
    const std::vector<Sample> data = load_dataset(data_dir);
    if (data.empty()) throw IOError("no samples in " + data_dir.string());
    if (!pred_dir && !ckpt_path) throw ConfigError("eval needs --ckpt or --pred");
    std::unique_ptr<Network> net;
    if (ckpt_path) net = load_network(*ckpt_path, config_path);
    if (dump) fs::create_directories(*dump);
    if (error_maps) fs::create_directories(*error_maps);

    Accumulator total;
    double peak1 = 0, peak3 = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Sample& s = data[i];
        DisparityMap pred;
        if (pred_dir) {
            const fs::path pfm = *pred_dir / (stem_of(static_cast<int>(i)) + "_disp.pfm");
            const fs::path png = *pred_dir / (stem_of(static_cast<int>(i)) + "_disp.png");
            pred = read_disparity(fs::exists(pfm) ? pfm : png).first;
            if (pred.values.shape() != s.gt.values.shape())
                throw ShapeError("prediction " + shape_str(pred.values.shape()) + " does not match ground truth");
        } else {
            const FullCostVolume volume = Network::cost_volume(net->forward(s.pair));
            pred = parabolic_subpixel(volume);
            if (dump) write_cost_volume(*dump / (stem_of(static_cast<int>(i)) + "_volume.bin"), volume);
            if (s.mask.count() > 0) {
                const auto dev = peak_deviation(volume, s.gt, s.mask);
                const auto v = static_cast<double>(s.mask.count());
                peak1 += dev[0] * v;
                peak3 += dev[1] * v;
            }
        }
        if (error_maps) error_map(pred, s.gt, s.mask, *error_maps / (stem_of(static_cast<int>(i)) + "_error.png"));
        if (s.mask.count() > 0) total.add(evaluate(pred, s.gt, s.mask));
    }
    const Metrics m = total.result();
    out << "samples " << data.size() << '\n';
    print_metrics(out, m);
    if (net) {
        const auto p = static_cast<double>(m.pixels);
        out << "peak>1px " << fixed(100.0 * peak1 / p, 2) << "%\n"
            << "peak>3px " << fixed(100.0 * peak3 / p, 2) << "%\n";
    }
    return kExitOk;
}

int cmd_infer(const fs::path& ckpt_path, const fs::path& left, const fs::path& right, const fs::path& out_path,
              const std::optional<fs::path>& gt_path, std::ostream& out) {
    const auto net = load_network(ckpt_path, std::nullopt);
    ImagePair pair{read_image(left), read_image(right)};
    if (pair.left.shape() != pair.right.shape()) throw ShapeError("left and right images differ in size");
    const DisparityMap pred = net->predict(pair);
    write_disparity(out_path, pred, ValidMask::all(pred.values.shape()));
    out << "wrote " << out_path.string() << '\n';
    if (gt_path) {
        const auto [gt, mask] = read_disparity(*gt_path);
        if (gt.values.shape() != pred.values.shape()) throw ShapeError("ground truth does not match the prediction");
        fs::path map_path = out_path;
        map_path.replace_filename(out_path.stem().string() + "_error.png");
        error_map(pred, gt, mask, map_path);
        out << "error map " << map_path.string() << '\n';
        print_metrics(out, evaluate(pred, gt, mask));
    }
    return kExitOk;
}

int cmd_ablate(const fs::path& config_path, const fs::path& data_dir, const std::optional<fs::path>& eval_dir,
               const fs::path& report_path, std::ostream& out) {
    const Config cfg = load_config(config_path);
    const std::vector<Sample> train = load_dataset(data_dir);
    if (train.empty()) throw IOError("no samples in " + data_dir.string());
    const std::vector<Sample> eval = eval_dir ? load_dataset(*eval_dir) : train;
    const auto rows = ablation_run(cfg, train, eval, &out);
    const std::string report = format_ablation_report(rows);
    if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
    std::ofstream f(report_path);
    if (!f) throw IOError("cannot write " + report_path.string());
    f << report;
    out << report;
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    if (const char* env = std::getenv("MFM_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long threads = std::strtol(env, &end, 10);
        if (*end != '\0' || threads < 1) {
            err << "error: MFM_THREADS must be a positive integer\n";
            return kExitUsage;
        }
        kernels::set_num_threads(static_cast<int>(threads));
    }

    CLI::App app{"Multistage full-matching stereo: data generation, training, evaluation, inference, ablation",
                 "mfm"};
    app.require_subcommand(1);

    fs::path spec, out_dir;
    int count = 0;
    std::uint64_t seed = 0;
    auto* gen = app.add_subcommand("gen-data", "Write random-dot stereo samples");
    gen->add_option("--spec", spec, "Generator spec file")->required();
    gen->add_option("--out", out_dir, "Output directory")->required();
    gen->add_option("--count", count, "Number of samples")->required();
    gen->add_option("--seed", seed, "Generator seed")->required();

    fs::path config;
    std::optional<fs::path> resume;
    auto* train = app.add_subcommand("train", "Train a network from a config file");
    train->add_option("--config", config, "Config file")->required();
    train->add_option("--resume", resume, "Checkpoint to resume from");

    std::optional<fs::path> eval_config, ckpt, pred, dump, maps;
    fs::path data;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or stored predictions on a dataset");
    eval->add_option("--config", eval_config, "Config file; must match the checkpoint architecture");
    eval->add_option("--ckpt", ckpt, "Checkpoint file");
    eval->add_option("--data", data, "Dataset directory")->required();
    eval->add_option("--pred", pred, "Directory of stored predictions instead of a checkpoint");
    eval->add_option("--dump-volumes", dump, "Directory for normalized cost volumes");
    eval->add_option("--error-maps", maps, "Directory for error-map images");

    fs::path infer_ckpt, left, right, infer_out;
    std::optional<fs::path> gt;
    auto* infer = app.add_subcommand("infer", "Predict the disparity of one image pair");
    infer->add_option("--ckpt", infer_ckpt, "Checkpoint file")->required();
    infer->add_option("--left", left, "Left image")->required();
    infer->add_option("--right", right, "Right image")->required();
    infer->add_option("--out", infer_out, "Output disparity (.png or .pfm)")->required();
    infer->add_option("--error-map", gt, "Ground truth; writes <out>_error.png and prints metrics");

    fs::path ablate_config, ablate_data, report;
    std::optional<fs::path> eval_data;
    auto* ablate = app.add_subcommand("ablate", "Train and compare the four ablation variants");
    ablate->add_option("--config", ablate_config, "Config file")->required();
    ablate->add_option("--data", ablate_data, "Training dataset directory")->required();
    ablate->add_option("--eval-data", eval_data, "Evaluation dataset directory (default: training data)");
    ablate->add_option("--out", report, "Report file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    try {
        if (*gen) return cmd_gen_data(spec, out_dir, count, seed, out);
        if (*train) return cmd_train(config, resume, out);
        if (*eval) return cmd_eval(eval_config, ckpt, data, pred, dump, maps, out);
        if (*infer) return cmd_infer(infer_ckpt, left, right, infer_out, gt, out);
        if (*ablate) return cmd_ablate(ablate_config, ablate_data, eval_data, report, out);
    } catch (const ValidationError& e) {
        err << "error: " << error_kind(e) << ": " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << error_kind(e) << ": " << e.what() << '\n';
        return kExitRuntime;
    }
    err << "usage error: no subcommand\n";
    return kExitUsage;
}

MFM_NAMESPACE_END
