#include "itoo/ingest/image.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <string>

#include "itoo/core/errors.hpp"

namespace itoo {

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0) throw ContractError("image dimensions must be positive");
    if (pixels_.size() != 3 * static_cast<std::size_t>(width) * height) {
        throw ContractError("image buffer length " + std::to_string(pixels_.size()) + " != 3*" +
                            std::to_string(width) + "*" + std::to_string(height));
    }
}

RasterImage::RasterImage(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : RasterImage(width, height, std::vector<std::uint8_t>(3 * static_cast<std::size_t>(std::max(width, 0)) *
                                                           std::max(height, 0))) {
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = r;
        pixels_[i + 1] = g;
        pixels_[i + 2] = b;
    }
}

RasterImage RasterImage::rows(int y0, int y1) const {
    return crop(0, y0, width_, y1 - y0);
}

RasterImage RasterImage::crop(int x, int y, int w, int h) const {
    const int x0 = std::max(x, 0);
    const int y0 = std::max(y, 0);
    const int x1 = std::min(x + w, width_);
    const int y1 = std::min(y + h, height_);
    if (x1 <= x0 || y1 <= y0) throw ContractError("empty crop");
    std::vector<std::uint8_t> out;
    out.reserve(3 * static_cast<std::size_t>(x1 - x0) * (y1 - y0));
    for (int yy = y0; yy < y1; ++yy) {
        const auto* row = at(x0, yy);
        out.insert(out.end(), row, row + 3 * (x1 - x0));
    }
    return RasterImage(x1 - x0, y1 - y0, std::move(out));
}

RasterImage read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || !in || maxval != 255) throw ParseError("expected binary P6 PPM with maxval 255", 0);
    in.get();
    std::vector<std::uint8_t> px(3 * static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (in.gcount() != static_cast<std::streamsize>(px.size())) {
        throw ParseError("truncated PPM pixel data", static_cast<std::uint64_t>(in.gcount()));
    }
    return RasterImage(w, h, std::move(px));
}

void write_ppm(const std::filesystem::path& path, const RasterImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image " + path.string());
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels().data()), static_cast<std::streamsize>(img.pixels().size()));
}

namespace {

bool is_uniform_row(const RasterImage& img, int y, int tol) {
    std::array<double, 3> mean{};
    for (int x = 0; x < img.width(); ++x) {
        const auto* p = img.at(x, y);
        for (int c = 0; c < 3; ++c) mean[c] += p[c];
    }
    for (auto& m : mean) m /= img.width();
    for (int x = 0; x < img.width(); ++x) {
        const auto* p = img.at(x, y);
        for (int c = 0; c < 3; ++c) {
            if (std::abs(p[c] - mean[c]) > tol) return false;
        }
    }
    return true;
}

}  // namespace

std::vector<RasterImage> split_descriptive_image(const RasterImage& img, int min_gap_rows, int uniformity_tol) {
    if (img.empty()) throw ContractError("split_descriptive_image: empty image");
    min_gap_rows = std::max(min_gap_rows, 1);
    const int h = img.height();
    std::vector<bool> separator(h, false);
    for (int y = 0; y < h;) {
        if (!is_uniform_row(img, y, uniformity_tol)) {
            ++y;
            continue;
        }
        int end = y;
        while (end < h && is_uniform_row(img, end, uniformity_tol)) ++end;
        if (end - y >= min_gap_rows) {
            for (int k = y; k < end; ++k) separator[k] = true;
        }
        y = end;
    }

    std::vector<RasterImage> segments;
    for (int y = 0; y < h;) {
        if (separator[y]) {
            ++y;
            continue;
        }
        int end = y;
        while (end < h && !separator[end]) ++end;
        segments.push_back(img.rows(y, end));
        y = end;
    }
    return segments;
}

PerceptualHash average_hash(const RasterImage& img) {
    if (img.empty()) throw ContractError("average_hash: empty image");
    const int w = img.width();
    const int h = img.height();
    const double cell_w = w / 8.0;
    const double cell_h = h / 8.0;

    // overlap of pixel interval [p, p+1) with cell interval [c*size, (c+1)*size)
    auto overlap = [](int p, int c, double size) {
        const double lo = std::max<double>(p, c * size);
        const double hi = std::min<double>(p + 1, (c + 1) * size);
        return std::max(0.0, hi - lo);
    };

    std::array<double, 64> cells{};
    for (int y = 0; y < h; ++y) {
        const int r0 = std::min(7, static_cast<int>(y / cell_h));
        const int r1 = std::min(7, static_cast<int>((y + 1) / cell_h));
        for (int x = 0; x < w; ++x) {
            const auto* p = img.at(x, y);
            const double g = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
            const int c0 = std::min(7, static_cast<int>(x / cell_w));
            const int c1 = std::min(7, static_cast<int>((x + 1) / cell_w));
            for (int r = r0; r <= r1; ++r) {
                const double wy = overlap(y, r, cell_h);
                if (wy == 0.0) continue;
                for (int c = c0; c <= c1; ++c) {
                    const double wx = overlap(x, c, cell_w);
                    cells[r * 8 + c] += g * wx * wy;
                }
            }
        }
    }
    double mean = 0.0;
    for (auto& v : cells) {
        v /= cell_w * cell_h;
        mean += v;
    }
    mean /= 64.0;

    // tolerance absorbs rounding so exactly-equal cells compare as >= mean
    constexpr double eps = 1e-9;
    std::uint64_t bits = 0;
    for (int i = 0; i < 64; ++i) {
        bits <<= 1;
        if (cells[i] >= mean - eps) bits |= 1;
    }
    return PerceptualHash{bits};
}

int hamming_distance(PerceptualHash a, PerceptualHash b) {
    return std::popcount(a.bits ^ b.bits);
}

}  // namespace itoo
