#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sahm/tensor.hpp"

namespace sahm {

/// 8-bit raster stored row-major with interleaved channels (1 or 3).
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    Image8() = default;
    Image8(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::uint8_t& at(int x, int y, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    std::uint8_t at(int x, int y, int c = 0) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    friend bool operator==(const Image8&, const Image8&) = default;
};

Image8 read_png(const std::filesystem::path& path, int channels);
void write_png(const std::filesystem::path& path, const Image8& image);

/// C x H x W in [0, 1].
Tensor to_tensor(const Image8& image);
/// Rounds and clamps to [0, 255]. Accepts 1 or 3 channels.
Image8 from_tensor(const Tensor& t);

} // namespace sahm
