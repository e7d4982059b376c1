#include "sahm/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sahm {

Image8 read_png(const std::filesystem::path& path, int channels)
{
    if (channels != 1 && channels != 3) throw std::invalid_argument("read_png: channels must be 1 or 3");
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw std::runtime_error("cannot read PNG " + path.string() + ": " + img.message);
    img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    Image8 out(static_cast<int>(img.width), static_cast<int>(img.height), channels);
    if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw std::runtime_error("cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

void write_png(const std::filesystem::path& path, const Image8& image)
{
    if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("write_png: channels must be 1 or 3");
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.data.data(), 0, nullptr))
        throw std::runtime_error("cannot write PNG " + path.string() + ": " + img.message);
}

Tensor to_tensor(const Image8& image)
{
    Tensor t({image.channels, image.height, image.width});
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x) t(c, y, x) = image.at(x, y, c) / 255.0;
    return t;
}

Image8 from_tensor(const Tensor& t)
{
    if (t.rank() != 3 || (t.dim(0) != 1 && t.dim(0) != 3))
        throw std::invalid_argument("from_tensor: expected 1 or 3 x H x W, got " + shape_str(t.shape()));
    Image8 out(t.dim(2), t.dim(1), t.dim(0));
    for (int c = 0; c < out.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x)
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(t(c, y, x) * 255.0), 0L, 255L));
    return out;
}

} // namespace sahm
