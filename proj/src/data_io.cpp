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

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <tuple>

#include <png.h>

#include "mfm/data.hpp"
#include "mfm/errors.hpp"

MFM_NAMESPACE_BEGIN

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IOError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IOError("write failed for " + path.string());
}

// --- PNG -----------------------------------------------------------------

struct PngPixels {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int bit_depth = 0;
    int channels = 0;
    std::vector<std::uint8_t> bytes;  // rows packed, 16-bit samples big-endian as stored
};

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

PngPixels decode_png(const fs::path& path) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
    if (!file) throw IOError("cannot open " + path.string());
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw FormatError(path.string() + " is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) throw IOError("libpng: cannot allocate read struct");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IOError("libpng: cannot allocate info struct");
    }
    PngPixels px;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("malformed PNG " + path.string());
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    px.width = png_get_image_width(png, info);
    px.height = png_get_image_height(png, info);
    px.bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && px.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    px.bit_depth = png_get_bit_depth(png, info);
    px.channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    px.bytes.resize(stride * px.height);
    rows.resize(px.height);
    for (std::uint32_t y = 0; y < px.height; ++y) rows[y] = px.bytes.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return px;
}

void encode_png(const fs::path& path, std::uint32_t width, std::uint32_t height, int bit_depth, int color_type,
                std::vector<std::uint8_t>& bytes, std::size_t stride) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IOError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) throw IOError("libpng: cannot allocate write struct");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw IOError("libpng: cannot allocate info struct");
    }
    std::vector<png_bytep> rows(height);
    for (std::uint32_t y = 0; y < height; ++y) rows[y] = bytes.data() + y * stride;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IOError("libpng failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint16_t sample16(const PngPixels& px, std::size_t index) {
    return static_cast<std::uint16_t>((px.bytes[2 * index] << 8) | px.bytes[2 * index + 1]);
}

}  // namespace

PfmImage read_pfm(const fs::path& path) {
    const std::string bytes = read_file(path);
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw FormatError("truncated PFM header in " + path.string());
        return bytes.substr(start, pos - start);
    };
    const std::string type = token();
    if (type != "Pf") throw FormatError("unsupported PFM type '" + type + "' in " + path.string());
    long width = 0, height = 0;
    double scale = 0;
    try {
        std::size_t used = 0;
        const std::string ws = token(), hs = token(), ss = token();
        width = std::stol(ws, &used);
        if (used != ws.size()) throw FormatError("bad width");
        height = std::stol(hs, &used);
        if (used != hs.size()) throw FormatError("bad height");
        scale = std::stod(ss, &used);
        if (used != ss.size()) throw FormatError("bad scale");
    } catch (const std::logic_error&) {
        throw FormatError("malformed PFM header in " + path.string());
    } catch (const FormatError& e) {
        throw FormatError(std::string(e.what()) + " in PFM header of " + path.string());
    }
    if (width <= 0 || height <= 0 || scale == 0.0 || !std::isfinite(scale))
        throw FormatError("invalid PFM dimensions or scale in " + path.string());
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw FormatError("truncated PFM header in " + path.string());
    ++pos;  // single whitespace byte ends the header

    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - pos < count * 4) throw FormatError("truncated PFM payload in " + path.string());
    const bool little = scale < 0;
    Tensor out({height, width});
    for (long row = 0; row < height; ++row) {
        const long dst_row = height - 1 - row;  // file stores the bottom row first
        for (long x = 0; x < width; ++x) {
            std::uint32_t bits = 0;
            const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + pos +
                                                                   4 * (static_cast<std::size_t>(row) * width + x));
            bits = little ? (std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
                             std::uint32_t(b[3]) << 24)
                          : (std::uint32_t(b[3]) | std::uint32_t(b[2]) << 8 | std::uint32_t(b[1]) << 16 |
                             std::uint32_t(b[0]) << 24);
            out[dst_row * width + x] = static_cast<real>(std::bit_cast<float>(bits));
        }
    }
    return PfmImage{std::move(out), scale};
}

void write_pfm(const fs::path& path, const Tensor& values, double scale) {
    Shape s = values.shape();
    if (s.size() == 3 && s[0] == 1) s.erase(s.begin());
    if (s.size() != 2) throw ShapeError("write_pfm expects [H,W] or [1,H,W], got " + shape_str(values.shape()));
    const std::int64_t h = s[0], w = s[1];
    std::ostringstream header;
    header << "Pf\n" << w << ' ' << h << '\n' << -std::abs(scale == 0.0 ? 1.0 : scale) << '\n';
    std::string bytes = header.str();
    bytes.reserve(bytes.size() + static_cast<std::size_t>(4 * h * w));
    for (std::int64_t row = h - 1; row >= 0; --row)
        for (std::int64_t x = 0; x < w; ++x) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[row * w + x]));
            for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<char>((bits >> (8 * k)) & 0xffU));
        }
    write_file(path, bytes);
}

std::pair<DisparityMap, ValidMask> read_disparity_png16(const fs::path& path) {
    const PngPixels px = decode_png(path);
    if (px.bit_depth != 16)
        throw FormatError(path.string() + ": disparity PNG must be 16-bit, got " + std::to_string(px.bit_depth));
    if (px.channels != 1)
        throw FormatError(path.string() + ": disparity PNG must have one channel, got " +
                          std::to_string(px.channels));
    const std::int64_t h = px.height, w = px.width;
    DisparityMap disp{Tensor({1, h, w}), Resolution::full};
    ValidMask mask = ValidMask::all({1, h, w}, false);
    for (std::int64_t i = 0; i < h * w; ++i) {
        const std::uint16_t v = sample16(px, static_cast<std::size_t>(i));
        disp.values[i] = static_cast<real>(v / 256.0);
        mask.flags[static_cast<std::size_t>(i)] = v != 0 ? 1 : 0;
    }
    return {std::move(disp), std::move(mask)};
}

void write_disparity_png16(const fs::path& path, const DisparityMap& disp, const ValidMask& mask) {
    const Tensor& v = disp.values;
    const std::int64_t h = v.dim(-2), w = v.dim(-1);
    if (v.numel() != h * w) throw ShapeError("write_disparity_png16 expects a single map");
    if (mask.size() != v.numel()) throw ShapeError("write_disparity_png16: mask size mismatch");
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(2 * h * w));
    for (std::int64_t i = 0; i < h * w; ++i) {
        std::uint16_t q = 0;
        if (mask[i]) {
            const double scaled = std::round(static_cast<double>(v[i]) * 256.0);
            q = static_cast<std::uint16_t>(std::clamp(scaled, 1.0, 65535.0));
        }
        bytes[static_cast<std::size_t>(2 * i)] = static_cast<std::uint8_t>(q >> 8);
        bytes[static_cast<std::size_t>(2 * i + 1)] = static_cast<std::uint8_t>(q & 0xffU);
    }
    encode_png(path, static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h), 16, PNG_COLOR_TYPE_GRAY, bytes,
               static_cast<std::size_t>(2 * w));
}

Tensor read_image(const fs::path& path) {
    const PngPixels px = decode_png(path);
    const std::int64_t h = px.height, w = px.width, plane = h * w;
    const int ch = px.channels;
    if (ch < 1 || ch > 4) throw FormatError(path.string() + ": unsupported channel count");
    const double full = px.bit_depth == 16 ? 65535.0 : 255.0;
    Tensor out({1, 3, h, w});
    for (std::int64_t i = 0; i < plane; ++i) {
        for (int c = 0; c < 3; ++c) {
            const int src_c = ch >= 3 ? c : 0;  // gray (+alpha) replicates
            const auto idx = static_cast<std::size_t>(i * ch + src_c);
            const double v = px.bit_depth == 16 ? sample16(px, idx) : px.bytes[idx];
            out[c * plane + i] = static_cast<real>(v / full);
        }
    }
    return out;
}

void write_image(const fs::path& path, const Tensor& image) {
    Shape s = image.shape();
    if (s.size() == 4 && s[0] == 1) s.erase(s.begin());
    if (s.size() != 3 || s[0] != 3) throw ShapeError("write_image expects [1,3,H,W] or [3,H,W]");
    const std::int64_t h = s[1], w = s[2], plane = h * w;
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(3 * plane));
    for (std::int64_t i = 0; i < plane; ++i)
        for (int c = 0; c < 3; ++c) {
            const double v = std::clamp(static_cast<double>(image[c * plane + i]), 0.0, 1.0);
            bytes[static_cast<std::size_t>(3 * i + c)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    encode_png(path, static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h), 8, PNG_COLOR_TYPE_RGB, bytes,
               static_cast<std::size_t>(3 * w));
}

namespace {

std::string sample_stem(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06d", index);
    return buf;
}

}  // namespace

void save_sample(const fs::path& dir, int index, const Sample& sample) {
    if (sample.pair.batch() != 1) throw ShapeError("save_sample expects a single sample");
    fs::create_directories(dir);
    const std::string stem = sample_stem(index);
    write_image(dir / (stem + "_left.png"), sample.pair.left);
    write_image(dir / (stem + "_right.png"), sample.pair.right);
    Tensor gt = sample.gt.values;
    for (std::int64_t i = 0; i < gt.numel(); ++i)
        if (!sample.mask[i]) gt[i] = std::numeric_limits<real>::infinity();
    write_pfm(dir / (stem + "_disp.pfm"), gt);
}

std::vector<Sample> load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IOError("dataset directory " + dir.string() + " does not exist");
    std::vector<fs::path> lefts;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 9 && name.ends_with("_left.png")) lefts.push_back(entry.path());
    }
    std::sort(lefts.begin(), lefts.end());
    std::vector<Sample> out;
    for (const auto& left_path : lefts) {
        const std::string name = left_path.filename().string();
        const std::string stem = name.substr(0, name.size() - 9);
        Sample s;
        s.pair.left = read_image(left_path);
        s.pair.right = read_image(dir / (stem + "_right.png"));
        require_shape(s.pair.right, s.pair.left.shape(), "right image");
        const fs::path pfm = dir / (stem + "_disp.pfm");
        const fs::path png = dir / (stem + "_disp.png");
        if (fs::exists(pfm)) {
            PfmImage img = read_pfm(pfm);
            const std::int64_t h = img.values.dim(0), w = img.values.dim(1);
            s.gt = DisparityMap{img.values.reshaped({1, h, w}), Resolution::full};
            s.mask = ValidMask::all({1, h, w}, false);
            for (std::int64_t i = 0; i < h * w; ++i) {
                const real v = s.gt.values[i];
                const bool ok = std::isfinite(v) && v >= 0;
                s.mask.flags[static_cast<std::size_t>(i)] = ok ? 1 : 0;
                if (!ok) s.gt.values[i] = 0;
            }
        } else if (fs::exists(png)) {
            std::tie(s.gt, s.mask) = read_disparity_png16(png);
        } else {
            throw IOError("no ground truth for " + left_path.string());
        }
        if (s.gt.values.dim(1) != s.pair.height() || s.gt.values.dim(2) != s.pair.width())
            throw ShapeError("ground truth size mismatch for " + left_path.string());
        out.push_back(std::move(s));
    }
    return out;
}

MFM_NAMESPACE_END
