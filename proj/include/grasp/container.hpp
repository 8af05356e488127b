#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "grasp/raster.hpp"

// GRSP raster container, all integers and floats little-endian:
//
//   "GRSP" | u16 version = 1
//   f64 origin_lon | f64 origin_lat | f64 pixel_size | u32 width | u32 height
//   u16 band count
//   per band: u16 name length, UTF-8 name, width*height f32 row-major
//   validity plane: width*height bytes, each 0 or 1

namespace grasp {

inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderSize = 4 + 2 + 3 * 8 + 2 * 4 + 2;

namespace detail {

class ByteWriter {
public:
    void put_u16(std::uint16_t v) { put_le(v, 2); }
    void put_u32(std::uint32_t v) { put_le(v, 4); }
    void put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
    void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
    void put_bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void put_bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    void reserve(std::size_t n) { out_.reserve(n); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(le(4))); }
    double f64() { return std::bit_cast<double>(le(8)); }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    [[noreturn]] void fail(const std::string& what, std::size_t at) const {
        throw Error(ErrorCode::FormatViolation, what + " at byte offset " + std::to_string(at), {}, at);
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) fail("truncated container", pos_);
    }
    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Exact byte size of the encoded container for `raster`.
inline std::size_t container_size(const Raster& raster) {
    std::size_t n = kContainerHeaderSize;
    for (const auto& b : raster.bands()) n += 2 + b.name.size() + 4 * b.values.size();
    return n + raster.valid().size();
}

inline std::vector<std::uint8_t> encode_container(const Raster& raster) {
    if (raster.bands().size() > 0xFFFF)
        throw Error(ErrorCode::InvalidArgument, "too many bands for the container format");
    detail::ByteWriter w;
    w.reserve(container_size(raster));
    const GridSpec& g = raster.grid();
    w.put_bytes(std::string_view("GRSP"));
    w.put_u16(kContainerVersion);
    w.put_f64(g.origin_lon);
    w.put_f64(g.origin_lat);
    w.put_f64(g.pixel_size);
    w.put_u32(g.width);
    w.put_u32(g.height);
    w.put_u16(static_cast<std::uint16_t>(raster.bands().size()));
    for (const auto& b : raster.bands()) {
        if (b.name.size() > 0xFFFF)
            throw Error(ErrorCode::InvalidArgument, "band name too long for the container format", b.name);
        w.put_u16(static_cast<std::uint16_t>(b.name.size()));
        w.put_bytes(b.name);
        for (float v : b.values.data) w.put_f32(v);
    }
    w.put_bytes(raster.valid().data);
    return w.take();
}

inline Raster decode_container(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    const auto magic = r.bytes(4);
    if (std::string_view(reinterpret_cast<const char*>(magic.data()), 4) != "GRSP") r.fail("bad magic", 0);
    if (const auto version = r.u16(); version != kContainerVersion)
        r.fail("unsupported version " + std::to_string(version), 4);

    GridSpec g;
    g.origin_lon = r.f64();
    g.origin_lat = r.f64();
    const std::size_t ps_at = r.offset();
    g.pixel_size = r.f64();
    if (!(g.pixel_size > 0.0) || !std::isfinite(g.pixel_size)) r.fail("non-positive pixel size", ps_at);
    const std::size_t dims_at = r.offset();
    g.width = r.u32();
    g.height = r.u32();
    if (g.width == 0 || g.height == 0) r.fail("empty grid", dims_at);
    const std::uint16_t band_count = r.u16();

    Raster out(g);
    const std::size_t n = g.pixel_count();
    for (std::uint16_t i = 0; i < band_count; ++i) {
        const std::size_t name_at = r.offset();
        const std::uint16_t len = r.u16();
        const auto raw = r.bytes(len);
        std::string name(raw.begin(), raw.end());
        if (out.has_band(name)) r.fail("duplicate band name '" + name + "'", name_at);
        if (r.remaining() / 4 < n) r.fail("truncated container", r.offset());
        FloatPlane values(g.width, g.height);
        for (std::size_t k = 0; k < n; ++k) values.data[k] = r.f32();
        out.add_band(std::move(name), std::move(values));
    }
    const std::size_t mask_at = r.offset();
    const auto mask = r.bytes(n);
    for (std::size_t k = 0; k < n; ++k)
        if (mask[k] > 1) r.fail("validity byte is not 0 or 1", mask_at + k);
    std::copy(mask.begin(), mask.end(), out.valid().data.begin());
    if (r.remaining() != 0) r.fail("trailing bytes after validity plane", r.offset());
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for reading", path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed on '" + path.string() + "'", path.string());
    return bytes;
}

/// Creates missing parent directories.
inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing", path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw Error(ErrorCode::IoFailure, "write failed on '" + path.string() + "'", path.string());
}

inline void write_container(const Raster& raster, const std::filesystem::path& path) {
    write_file_bytes(path, encode_container(raster));
}

inline Raster read_container(const std::filesystem::path& path) {
    return decode_container(read_file_bytes(path));
}

} // namespace grasp
