#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace itoo {

/// Row-major 8-bit RGB image.
class RasterImage {
public:
    RasterImage() = default;
    /// Throws ContractError unless width*height > 0 and pixels.size() == 3*width*height.
    RasterImage(int width, int height, std::vector<std::uint8_t> pixels);
    /// Solid fill.
    RasterImage(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }
    std::span<const std::uint8_t> pixels() const { return pixels_; }

    const std::uint8_t* at(int x, int y) const { return &pixels_[3 * (static_cast<std::size_t>(y) * width_ + x)]; }
    std::uint8_t* at(int x, int y) { return &pixels_[3 * (static_cast<std::size_t>(y) * width_ + x)]; }

    /// Rows [y0, y1) as a new image.
    RasterImage rows(int y0, int y1) const;
    /// Clipped rectangle; throws ContractError when the clip is empty.
    RasterImage crop(int x, int y, int w, int h) const;

    bool operator==(const RasterImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Binary PPM (P6, maxval 255).
RasterImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RasterImage& img);

/// Cuts a vertically stacked product-description image at separator bands. A row is
/// near-uniform when every channel of every pixel lies within `uniformity_tol` of that
/// channel's row mean; a separator is a run of at least `min_gap_rows` such rows.
std::vector<RasterImage> split_descriptive_image(const RasterImage& img, int min_gap_rows,
                                                 int uniformity_tol);

/// 64-bit average hash.
struct PerceptualHash {
    std::uint64_t bits = 0;
    bool operator==(const PerceptualHash&) const = default;
};

/// Grayscale (0.299R+0.587G+0.114B), area-average to 8x8, bit set iff cell >= mean,
/// packed row-major with the top-left cell in the most significant bit.
PerceptualHash average_hash(const RasterImage& img);

int hamming_distance(PerceptualHash a, PerceptualHash b);

}  // namespace itoo
