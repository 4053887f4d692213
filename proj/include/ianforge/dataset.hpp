#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ianforge/rng.hpp"
#include "ianforge/tensor.hpp"

namespace ianforge {

enum class DataMode { Points2d, Image16 };

constexpr int kImageSide = 16;
constexpr int kImageDim = kImageSide * kImageSide;

// Synthetic stand-in corpora; every sample lives in [-1,1]^D.
struct Dataset {
    DataMode mode = DataMode::Points2d;
    Tensor samples;  // [N, D]

    int dim() const { return samples.cols(); }
    int size() const { return samples.rows(); }

    void check() const {
        const int expect = mode == DataMode::Points2d ? 2 : kImageDim;
        if (samples.cols() != expect)
            throw std::invalid_argument("dataset: dimension " + std::to_string(samples.cols()) +
                                        " does not match mode");
        for (double v : samples.data)
            if (v < -1.0 || v > 1.0 || !std::isfinite(v))
                throw std::invalid_argument("dataset: values must lie in [-1,1]");
    }
};

enum class DataKind { Ring, Blobs, Shifted, Disks, Crosses };

inline DataKind data_kind_from(const std::string& s) {
    if (s == "ring") return DataKind::Ring;
    if (s == "blobs") return DataKind::Blobs;
    if (s == "shifted") return DataKind::Shifted;
    if (s == "disks") return DataKind::Disks;
    if (s == "crosses") return DataKind::Crosses;
    throw std::invalid_argument("unknown data kind '" + s + "'");
}

namespace detail {

inline double clamp_unit(double v) { return std::min(1.0, std::max(-1.0, v)); }

// Radius band [0.8, 1.0], coordinate noise sigma 0.02, clamped to the box.
inline Tensor gen_ring(int n, Rng& rng) {
    Tensor t = Tensor::zeros({n, 2});
    for (int i = 0; i < n; ++i) {
        const double angle = rng.uniform(0.0, 2.0 * M_PI);
        const double radius = rng.uniform(0.8, 1.0);
        t.at(i, 0) = clamp_unit(radius * std::cos(angle) + 0.02 * rng.normal());
        t.at(i, 1) = clamp_unit(radius * std::sin(angle) + 0.02 * rng.normal());
    }
    return t;
}

inline Tensor gen_blobs(int n, Rng& rng, double shift_x, double shift_y) {
    static constexpr double centers[4][2] = {{0.45, 0.45}, {-0.45, 0.45}, {-0.45, -0.45}, {0.45, -0.45}};
    Tensor t = Tensor::zeros({n, 2});
    for (int i = 0; i < n; ++i) {
        const int c = std::min(3, static_cast<int>(rng.uniform01() * 4.0));
        t.at(i, 0) = clamp_unit(centers[c][0] + shift_x + 0.05 * rng.normal());
        t.at(i, 1) = clamp_unit(centers[c][1] + shift_y + 0.05 * rng.normal());
    }
    return t;
}

// Filled circle, radius 2..6 px, soft one-pixel edge; background -1.
inline Tensor gen_disks(int n, Rng& rng) {
    Tensor t = Tensor::full({n, kImageDim}, -1.0);
    for (int i = 0; i < n; ++i) {
        const double r = rng.uniform(2.0, 6.0);
        const double cx = rng.uniform(r + 1.0, kImageSide - 1.0 - r);
        const double cy = rng.uniform(r + 1.0, kImageSide - 1.0 - r);
        for (int y = 0; y < kImageSide; ++y) {
            for (int x = 0; x < kImageSide; ++x) {
                const double d = std::hypot(x - cx, y - cy);
                // +1 inside, -1 outside, linear ramp across one pixel
                const double v = std::min(1.0, std::max(-1.0, 2.0 * (r + 0.5 - d) - 1.0));
                t.at(i, y * kImageSide + x) = std::max(t.at(i, y * kImageSide + x), v);
            }
        }
    }
    return t;
}

// Axis-aligned plus sign: two 3-px bars, arm half-length 3..6 px. Centers
// snap to the pixel grid so every cross has crisp full-width bars.
inline Tensor gen_crosses(int n, Rng& rng) {
    Tensor t = Tensor::full({n, kImageDim}, -1.0);
    for (int i = 0; i < n; ++i) {
        const double arm = rng.uniform(3.0, 6.0);
        const double cx = std::floor(rng.uniform(arm + 1.0, kImageSide - 1.0 - arm));
        const double cy = std::floor(rng.uniform(arm + 1.0, kImageSide - 1.0 - arm));
        for (int y = 0; y < kImageSide; ++y) {
            for (int x = 0; x < kImageSide; ++x) {
                const double dx = std::abs(x - cx);
                const double dy = std::abs(y - cy);
                const bool inside = (dx <= 1.0 && dy <= arm) || (dy <= 1.0 && dx <= arm);
                if (inside) t.at(i, y * kImageSide + x) = 1.0;
            }
        }
    }
    return t;
}

}  // namespace detail

inline Dataset generate_dataset(DataKind kind, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
    Rng rng(seed);
    Dataset d;
    switch (kind) {
        case DataKind::Ring:
            d.mode = DataMode::Points2d;
            d.samples = detail::gen_ring(n, rng);
            break;
        case DataKind::Blobs:
            d.mode = DataMode::Points2d;
            d.samples = detail::gen_blobs(n, rng, 0.0, 0.0);
            break;
        case DataKind::Shifted:
            d.mode = DataMode::Points2d;
            d.samples = detail::gen_blobs(n, rng, 0.3, -0.3);
            break;
        case DataKind::Disks:
            d.mode = DataMode::Image16;
            d.samples = detail::gen_disks(n, rng);
            break;
        case DataKind::Crosses:
            d.mode = DataMode::Image16;
            d.samples = detail::gen_crosses(n, rng);
            break;
    }
    d.check();
    return d;
}

// ---- CSV -------------------------------------------------------------------

// UTF-8, '.' decimal, LF line ends, %.17g so values round-trip exactly.
inline void write_points_csv(const std::string& path, const Tensor& points) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    const int cols = points.cols();
    for (int j = 0; j < cols; ++j) out << (j ? ",x" : "x") << j;
    out << "\n";
    char buf[64];
    for (int i = 0; i < points.rows(); ++i) {
        for (int j = 0; j < cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", points.at(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline Tensor read_points_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::vector<double> data;
    int cols = -1;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first && line.rfind("x0", 0) == 0) {
            first = false;
            continue;  // header
        }
        first = false;
        std::stringstream ss(line);
        std::string cell;
        int c = 0;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            if (used != cell.size()) throw std::runtime_error("bad number '" + cell + "' in '" + path + "'");
            data.push_back(v);
            ++c;
        }
        if (cols < 0) cols = c;
        if (c != cols) throw std::runtime_error("ragged CSV row in '" + path + "'");
    }
    if (cols < 1 || data.empty()) throw std::runtime_error("no data rows in '" + path + "'");
    const int rows = static_cast<int>(data.size()) / cols;
    return Tensor({rows, cols}, std::move(data));
}

// ---- PGM (binary P5, maxval 255, [-1,1] mapped linearly) --------------------

inline unsigned char to_byte(double v) {
    const double b = std::lround((detail::clamp_unit(v) + 1.0) * 127.5);
    return static_cast<unsigned char>(std::min(255.0, std::max(0.0, b)));
}

inline double from_byte(unsigned char b) { return static_cast<double>(b) / 127.5 - 1.0; }

inline void write_pgm(const std::string& path, const double* img, int width, int height) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "P5\n" << width << " " << height << "\n255\n";
    for (int i = 0; i < width * height; ++i) out.put(static_cast<char>(to_byte(img[i])));
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::vector<double> read_pgm(const std::string& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::string magic;
    int maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P5" || maxval != 255 || width < 1 || height < 1)
        throw std::runtime_error("unsupported PGM '" + path + "'");
    in.get();  // single whitespace after header
    std::vector<double> img(static_cast<std::size_t>(width) * height);
    for (auto& v : img) {
        const int b = in.get();
        if (b < 0) throw std::runtime_error("truncated PGM '" + path + "'");
        v = from_byte(static_cast<unsigned char>(b));
    }
    return img;
}

// Image sets live in a directory: index.csv naming one 16x16 PGM per row.
inline void write_image_set(const std::string& dir, const Tensor& images) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream index(fs::path(dir) / "index.csv", std::ios::binary | std::ios::trunc);
    if (!index) throw std::runtime_error("cannot write index in '" + dir + "'");
    index << "filename\n";
    char name[32];
    for (int i = 0; i < images.rows(); ++i) {
        std::snprintf(name, sizeof name, "%05d.pgm", i);
        write_pgm((fs::path(dir) / name).string(), &images.data[static_cast<std::size_t>(i) * kImageDim],
                  kImageSide, kImageSide);
        index << name << "\n";
    }
    if (!index) throw std::runtime_error("write failed for index in '" + dir + "'");
}

inline Tensor read_image_set(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream index(fs::path(dir) / "index.csv", std::ios::binary);
    if (!index) throw std::runtime_error("cannot read index in '" + dir + "'");
    std::string line;
    std::getline(index, line);  // header
    std::vector<double> data;
    int n = 0;
    while (std::getline(index, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        int w = 0, h = 0;
        const auto img = read_pgm((fs::path(dir) / line).string(), w, h);
        if (w != kImageSide || h != kImageSide)
            throw std::runtime_error("image in '" + dir + "' is not " + std::to_string(kImageSide) + "x" +
                                     std::to_string(kImageSide));
        data.insert(data.end(), img.begin(), img.end());
        ++n;
    }
    if (n == 0) throw std::runtime_error("empty image set in '" + dir + "'");
    return Tensor({n, kImageDim}, std::move(data));
}

// ---- combined entry points ---------------------------------------------------

inline void save_dataset(const std::string& path, const Dataset& d) {
    if (d.mode == DataMode::Points2d)
        write_points_csv(path, d.samples);
    else
        write_image_set(path, d.samples);
}

inline Dataset load_dataset(const std::string& path) {
    Dataset d;
    if (std::filesystem::is_directory(path)) {
        d.mode = DataMode::Image16;
        d.samples = read_image_set(path);
    } else {
        d.mode = DataMode::Points2d;
        d.samples = read_points_csv(path);
    }
    d.check();
    return d;
}

inline void make_data(DataKind kind, int n, std::uint64_t seed, const std::string& out_path) {
    save_dataset(out_path, generate_dataset(kind, n, seed));
}

}  // namespace ianforge
