#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "grasp/raster.hpp"

namespace grasp {

inline constexpr std::uint32_t kTileSize = 256;
inline constexpr int kMaxZoom = 22;

struct TileKey {
    int z = 0;
    std::uint32_t x = 0;
    std::uint32_t y = 0;

    friend bool operator==(const TileKey&, const TileKey&) = default;
};

inline bool is_valid(const TileKey& k) noexcept {
    if (k.z < 0 || k.z > kMaxZoom) return false;
    const std::uint64_t n = std::uint64_t{1} << k.z;
    return k.x < n && k.y < n;
}

namespace detail {

// Latitude (degrees) of normalized Mercator y in [0, 1], 0 at the north edge.
inline double mercator_lat(double t) noexcept {
    return std::atan(std::sinh(std::numbers::pi * (1.0 - 2.0 * t))) * 180.0 / std::numbers::pi;
}

inline double mercator_t(double lat_deg) noexcept {
    const double phi = lat_deg * std::numbers::pi / 180.0;
    return (1.0 - std::log(std::tan(phi) + 1.0 / std::cos(phi)) / std::numbers::pi) / 2.0;
}

} // namespace detail

inline TileKey lonlat_to_tile(double lon, double lat, int z) {
    if (!(std::abs(lat) < kMaxMercatorLat) || !(lon >= -180.0 && lon < 180.0) || z < 0 || z > kMaxZoom)
        throw Error(ErrorCode::OutOfRange, "coordinate or zoom outside the tile pyramid");
    const double n = std::ldexp(1.0, z);
    const double max_index = n - 1.0;
    const double fx = std::clamp(std::floor((lon + 180.0) / 360.0 * n), 0.0, max_index);
    const double fy = std::clamp(std::floor(detail::mercator_t(lat) * n), 0.0, max_index);
    return {z, static_cast<std::uint32_t>(fx), static_cast<std::uint32_t>(fy)};
}

inline BoundingBox tile_bounds(const TileKey& key) {
    if (!is_valid(key)) throw Error(ErrorCode::OutOfRange, "invalid tile key");
    const double n = std::ldexp(1.0, key.z);
    return {key.x / n * 360.0 - 180.0, detail::mercator_lat((key.y + 1.0) / n), (key.x + 1.0) / n * 360.0 - 180.0,
            detail::mercator_lat(key.y / n)};
}

/// Lon/lat of the center of pixel (col, row) of a `size`-pixel tile.
inline LonLat tile_pixel_center(const TileKey& key, std::uint32_t size, std::uint32_t col, std::uint32_t row) {
    const double world = std::ldexp(1.0, key.z) * size;
    const double gx = (static_cast<double>(key.x) * size + col + 0.5) / world;
    const double gy = (static_cast<double>(key.y) * size + row + 0.5) / world;
    return {gx * 360.0 - 180.0, detail::mercator_lat(gy)};
}

/// Nearest-neighbour resampling of `raster` into the Mercator pixel grid of
/// one tile. The returned raster's grid is nominal (west/north origin, lon
/// pixel pitch); its rows are Mercator rows, not uniform latitude steps.
/// Pixels outside the source, or over source nodata, are invalid.
inline Raster resample_to_tile(const Raster& raster, const TileKey& key, std::uint32_t size = kTileSize) {
    const BoundingBox tb = tile_bounds(key);
    const GridSpec& src = raster.grid();
    if (!tb.intersects(src.bounds()))
        throw Error(ErrorCode::EmptyIntersection, "tile does not intersect the raster extent");

    GridSpec nominal{tb.west, tb.north, (tb.east - tb.west) / size, size, size};
    Raster out(nominal);
    for (const auto& b : raster.bands()) out.add_band(b.name);
    std::vector<std::pair<const FloatPlane*, FloatPlane*>> planes;
    for (const auto& b : raster.bands()) planes.emplace_back(&b.values, &out.band(b.name));

    std::vector<std::optional<std::size_t>> cols(size), rows(size);
    for (std::uint32_t i = 0; i < size; ++i) {
        const LonLat p = tile_pixel_center(key, size, i, i);
        const double fc = std::floor((p.lon - src.origin_lon) / src.pixel_size);
        const double fr = std::floor((src.origin_lat - p.lat) / src.pixel_size);
        if (fc >= 0.0 && fc < src.width) cols[i] = static_cast<std::size_t>(fc);
        if (fr >= 0.0 && fr < src.height) rows[i] = static_cast<std::size_t>(fr);
    }
    for (std::uint32_t r = 0; r < size; ++r) {
        for (std::uint32_t c = 0; c < size; ++c) {
            if (!rows[r] || !cols[c] || !raster.is_valid(*cols[c], *rows[r])) {
                out.valid()(c, r) = 0;
                continue;
            }
            for (auto& [from, to] : planes) (*to)(c, r) = (*from)(*cols[c], *rows[r]);
        }
    }
    return out;
}

} // namespace grasp
