#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "malcert/linalg.hpp"

namespace malcert {

struct ByteImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, width * height
};

// Byteplot: pixel i = byte i, height = ceil(len/width), final row zero-padded.
ByteImage bytes_to_image(const std::vector<std::uint8_t>& data, std::size_t width);

// Nearest neighbor, source index floor(i * src / dst) per axis.
ByteImage resize_nearest(const ByteImage& img, std::size_t out_w, std::size_t out_h);

// Row-major flatten, pixel / 255.
Vec normalize(const ByteImage& img);

struct ScalerParams {
    Vec mean;
    Vec std;  // population standard deviation
};

ScalerParams fit_scaler(const std::vector<Vec>& rows);
// z = (x - mean)/std, with std 0 mapping to output 0.
Vec apply_scaler(const ScalerParams& p, const Vec& x);

std::string scaler_to_json(const ScalerParams& p);
ScalerParams scaler_from_json(const std::string& text);

// Binary P5 portable graymap, maxval 255.
std::string write_pgm(const ByteImage& img);
ByteImage read_pgm(const std::string& bytes);

}  // namespace malcert
