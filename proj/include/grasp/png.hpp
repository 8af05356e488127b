#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "grasp/error.hpp"

namespace grasp {

struct Rgba {
    std::uint8_t r = 0, g = 0, b = 0, a = 0;
    friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// 8-bit RGBA PNG, filter type 0 on every row, zlib level 6. Output depends
/// only on the pixels, so equal images encode to equal bytes.
inline std::string encode_png_rgba(std::span<const Rgba> pixels, std::uint32_t width, std::uint32_t height) {
    if (pixels.size() != std::size_t{width} * height)
        throw Error(ErrorCode::ShapeMismatch, "pixel buffer does not match PNG dimensions");

    std::vector<std::uint8_t> raw;
    raw.reserve(std::size_t{height} * (1 + std::size_t{width} * 4));
    for (std::uint32_t y = 0; y < height; ++y) {
        raw.push_back(0);
        for (std::uint32_t x = 0; x < width; ++x) {
            const Rgba& p = pixels[std::size_t{y} * width + x];
            raw.insert(raw.end(), {p.r, p.g, p.b, p.a});
        }
    }
    uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> packed(packed_size);
    if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw Error(ErrorCode::IoFailure, "zlib compression failed");
    packed.resize(packed_size);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    auto put_u32 = [](std::string& s, std::uint32_t v) {
        for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    auto chunk = [&](const char* type, std::span<const std::uint8_t> data) {
        put_u32(out, static_cast<std::uint32_t>(data.size()));
        std::string body(type, 4);
        body.append(reinterpret_cast<const char*>(data.data()), data.size());
        out += body;
        put_u32(out, static_cast<std::uint32_t>(
                         crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
    };
    std::vector<std::uint8_t> ihdr;
    for (std::uint32_t v : {width, height})
        for (int i = 3; i >= 0; --i) ihdr.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    ihdr.insert(ihdr.end(), {8, 6, 0, 0, 0}); // depth 8, RGBA, deflate, adaptive filtering, no interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", packed);
    chunk("IEND", {});
    return out;
}

} // namespace grasp
