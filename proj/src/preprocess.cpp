#include "malcert/preprocess.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace malcert {

ByteImage bytes_to_image(const std::vector<std::uint8_t>& data, std::size_t width) {
    if (data.empty()) throw std::invalid_argument("byteplot: empty input");
    if (width == 0) throw std::invalid_argument("byteplot: width must be >= 1");
    ByteImage img;
    img.width = width;
    img.height = (data.size() + width - 1) / width;
    img.pixels.assign(img.width * img.height, 0);
    for (std::size_t i = 0; i < data.size(); ++i) img.pixels[i] = data[i];
    return img;
}

ByteImage resize_nearest(const ByteImage& img, std::size_t out_w, std::size_t out_h) {
    if (img.width == 0 || img.height == 0 || img.pixels.size() != img.width * img.height)
        throw std::invalid_argument("resize: malformed image");
    if (out_w == 0 || out_h == 0) throw std::invalid_argument("resize: zero target size");
    ByteImage out;
    out.width = out_w;
    out.height = out_h;
    out.pixels.resize(out_w * out_h);
    for (std::size_t r = 0; r < out_h; ++r) {
        const std::size_t sr = r * img.height / out_h;
        for (std::size_t c = 0; c < out_w; ++c) {
            const std::size_t sc = c * img.width / out_w;
            out.pixels[r * out_w + c] = img.pixels[sr * img.width + sc];
        }
    }
    return out;
}

Vec normalize(const ByteImage& img) {
    if (img.pixels.size() != img.width * img.height)
        throw std::invalid_argument("normalize: malformed image");
    Vec out(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out[i] = static_cast<double>(img.pixels[i]) / 255.0;
    return out;
}

ScalerParams fit_scaler(const std::vector<Vec>& rows) {
    if (rows.empty()) throw std::invalid_argument("scaler: no rows");
    const std::size_t n = rows[0].size();
    if (n == 0) throw std::invalid_argument("scaler: empty rows");
    for (const Vec& r : rows)
        if (r.size() != n) throw std::invalid_argument("scaler: ragged rows");

    ScalerParams p;
    p.mean.assign(n, 0.0);
    p.std.assign(n, 0.0);
    const double m = static_cast<double>(rows.size());
    for (const Vec& r : rows)
        for (std::size_t j = 0; j < n; ++j) p.mean[j] += r[j];
    for (std::size_t j = 0; j < n; ++j) p.mean[j] /= m;
    for (const Vec& r : rows)
        for (std::size_t j = 0; j < n; ++j) {
            const double d = r[j] - p.mean[j];
            p.std[j] += d * d;
        }
    for (std::size_t j = 0; j < n; ++j) p.std[j] = std::sqrt(p.std[j] / m);
    return p;
}

Vec apply_scaler(const ScalerParams& p, const Vec& x) {
    if (p.mean.size() != p.std.size() || x.size() != p.mean.size())
        throw std::invalid_argument("scaler: dimension mismatch");
    Vec z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        z[j] = p.std[j] > 0.0 ? (x[j] - p.mean[j]) / p.std[j] : 0.0;
    return z;
}

std::string scaler_to_json(const ScalerParams& p) {
    nlohmann::ordered_json doc;
    doc["mean"] = p.mean;
    doc["std"] = p.std;
    return doc.dump();
}

ScalerParams scaler_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("scaler: malformed JSON: ") + e.what());
    }
    try {
        ScalerParams p;
        p.mean = doc.at("mean").get<Vec>();
        p.std = doc.at("std").get<Vec>();
        if (p.mean.size() != p.std.size() || p.mean.empty())
            throw std::runtime_error("scaler: inconsistent parameter lengths");
        for (double s : p.std)
            if (s < 0.0) throw std::runtime_error("scaler: negative std");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("scaler: ") + e.what());
    }
}

std::string write_pgm(const ByteImage& img) {
    if (img.width == 0 || img.height == 0 || img.pixels.size() != img.width * img.height)
        throw std::invalid_argument("pgm: malformed image");
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

namespace {

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(const std::string& s, std::size_t& pos) {
    while (pos < s.size()) {
        if (std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        } else if (s[pos] == '#') {
            while (pos < s.size() && s[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) throw std::runtime_error("pgm: truncated header");
    return s.substr(start, pos - start);
}

}  // namespace

ByteImage read_pgm(const std::string& bytes) {
    std::size_t pos = 0;
    if (pgm_token(bytes, pos) != "P5") throw std::runtime_error("pgm: not a P5 graymap");
    unsigned long w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(pgm_token(bytes, pos));
        h = std::stoul(pgm_token(bytes, pos));
        maxval = std::stoul(pgm_token(bytes, pos));
    } catch (const std::exception&) {
        throw std::runtime_error("pgm: bad header numbers");
    }
    if (w == 0 || h == 0) throw std::runtime_error("pgm: zero dimensions");
    if (maxval != 255) throw std::runtime_error("pgm: only maxval 255 supported");
    ++pos;  // single whitespace after maxval
    if (pos > bytes.size() || bytes.size() - pos < w * h)
        throw std::runtime_error("pgm: truncated pixel data");
    ByteImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + w * h));
    return img;
}

}  // namespace malcert
