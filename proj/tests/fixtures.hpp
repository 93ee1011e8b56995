// Shared test fixtures: temp directories, image-file writers, and the
// synthetic blob/dot image generator used by the separation tests.
#pragma once

#include <png.h>
#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <fstream>
#include <string>
#include <vector>

#include "anomalnet/dataset.hpp"
#include "anomalnet/rng.hpp"
#include "anomalnet/tensor.hpp"

namespace testsupport {

struct TempDir {
    std::filesystem::path dir;
    explicit TempDir(const std::string& tag = "anomalnet_test") {
        static int counter = 0;
        dir = std::filesystem::temp_directory_path() /
              (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(dir);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    TempDir(TempDir&& other) noexcept : dir(std::move(other.dir)) { other.dir.clear(); }
    TempDir& operator=(TempDir&&) = delete;
    ~TempDir() {
        if (dir.empty()) return;
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
    }
    std::string file(const std::string& name) const { return (dir / name).string(); }
    std::string subdir(const std::string& name) const {
        const auto p = dir / name;
        std::filesystem::create_directories(p);
        return p.string();
    }
};

// RGB8 PNG via libpng's simplified write API; pixels row-major RGBRGB...
inline void write_png_rgb8(const std::string& path, const std::vector<uint8_t>& rgb, int width,
                           int height) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = (png_uint_32)width;
    image.height = (png_uint_32)height;
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr))
        throw std::runtime_error("test fixture: png write failed: " + path);
}

inline void write_gray_png(const std::string& path, const std::vector<uint8_t>& gray, int width,
                           int height) {
    std::vector<uint8_t> rgb((size_t)width * height * 3);
    for (size_t i = 0; i < gray.size(); ++i)
        rgb[i * 3] = rgb[i * 3 + 1] = rgb[i * 3 + 2] = gray[i];
    write_png_rgb8(path, rgb, width, height);
}

inline void write_gray_pgm(const std::string& path, const std::vector<uint8_t>& gray, int width,
                           int height) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "P5\n" << width << " " << height << "\n255\n";
    f.write(reinterpret_cast<const char*>(gray.data()), (std::streamsize)gray.size());
}

// Smooth seeded Gaussian blob on a dim background; the "normal" image class.
inline anomalnet::Tensor<float> blob_image(int size, anomalnet::SplitMix64& gen) {
    const double cx = size / 2.0 + (gen.next_double() - 0.5) * size / 4.0;
    const double cy = size / 2.0 + (gen.next_double() - 0.5) * size / 4.0;
    const double sigma = size / 6.0 + gen.next_double() * size / 8.0;
    const double amp = 0.55 + 0.3 * gen.next_double();
    const double bg = 0.05 + 0.05 * gen.next_double();

    anomalnet::Tensor<float> img({1, size, size});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            const double v = bg + amp * std::exp(-d2 / (2.0 * sigma * sigma));
            img[(int64_t)y * size + x] = (float)std::min(1.0, v);
        }
    return img;
}

// Same blob plus a small high-intensity dot; the "anomalous" image class.
inline anomalnet::Tensor<float> blob_with_dot(int size, anomalnet::SplitMix64& gen) {
    anomalnet::Tensor<float> img = blob_image(size, gen);
    const int dot = 3;
    const int margin = std::max(0, std::min(4, (size - dot - 1) / 2));
    const int span = size - 2 * margin - dot + 1;
    const int dx = margin + (int)gen.next_below((uint64_t)span);
    const int dy = margin + (int)gen.next_below((uint64_t)span);
    for (int y = dy; y < dy + dot; ++y)
        for (int x = dx; x < dx + dot; ++x) img[(int64_t)y * size + x] = 1.0f;
    return img;
}

inline anomalnet::ImageRecord synthetic_record(const std::string& tag, anomalnet::Label label,
                                               anomalnet::Tensor<float> pixels) {
    return {tag, label, std::move(pixels)};
}

} // namespace testsupport
