#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anomalnet/tensor.hpp"

namespace anomalnet {

// Decodes a PNG (any color type) or binary PGM/PPM file into a [3,H,W] float
// tensor with values in [0,255]; grayscale sources are replicated across the
// three channels. Unopenable paths raise io errors, undecodable content data
// errors carrying the path.
Tensor<float> decode_image(const std::string& path);

// True when the file starts with a recognized image signature (PNG, P5, P6).
bool is_image_file(const std::string& path);

// ITU-R BT.601 luma, Y = 0.299 R + 0.587 G + 0.114 B, written in a form that
// maps R=G=B=v to exactly v. Input [3,H,W], output [1,H,W], same value range.
Tensor<float> to_grayscale(const Tensor<float>& rgb);

// Bilinear resize with half-pixel-center source mapping
// (src = (dst + 0.5)*scale - 0.5), edge-clamped. Constant images map to
// constant images exactly. Input [C,H,W].
Tensor<float> resize_bilinear(const Tensor<float>& img, int out_h, int out_w);

// decode -> grayscale -> resize to size x size -> scale into [0,1]
Tensor<float> preprocess_image(const std::string& path, int size);

// [0,1] floats to 8-bit, rounded half-up.
std::vector<uint8_t> quantize_u8(const Tensor<float>& img);

// Binary PGM (P5), maxval 255.
void write_pgm(const std::string& path, const std::vector<uint8_t>& pixels, int width,
               int height);

} // namespace anomalnet
