#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grasp/error.hpp"

namespace grasp {

// Latitude limit of the square Web-Mercator world, atan(sinh(pi)) in degrees.
inline constexpr double kMaxMercatorLat = 85.05112877980659;

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

struct BoundingBox {
    double west = 0.0;
    double south = 0.0;
    double east = 0.0;
    double north = 0.0;

    bool is_valid() const noexcept { return west < east && south < north; }

    bool intersects(const BoundingBox& o) const noexcept {
        return west < o.east && o.west < east && south < o.north && o.south < north;
    }

    bool contains(double lon, double lat) const noexcept {
        return lon >= west && lon <= east && lat >= south && lat <= north;
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct PixelIndex {
    std::size_t col = 0;
    std::size_t row = 0;
    friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Regular lat/lon grid anchored at its top-left corner. Rows run north to
/// south, columns west to east; every pixel is square in degrees.
struct GridSpec {
    double origin_lon = 0.0;
    double origin_lat = 0.0;
    double pixel_size = 1.0;
    std::uint32_t width = 1;
    std::uint32_t height = 1;

    std::size_t pixel_count() const noexcept { return std::size_t{width} * height; }

    double center_lon(std::size_t col) const noexcept {
        return origin_lon + (static_cast<double>(col) + 0.5) * pixel_size;
    }
    double center_lat(std::size_t row) const noexcept {
        return origin_lat - (static_cast<double>(row) + 0.5) * pixel_size;
    }

    BoundingBox bounds() const noexcept {
        return {origin_lon, origin_lat - height * pixel_size, origin_lon + width * pixel_size, origin_lat};
    }

    /// Pixel whose cell contains the point (equivalently, the nearest center).
    std::optional<PixelIndex> locate(double lon, double lat) const noexcept {
        const double fc = std::floor((lon - origin_lon) / pixel_size);
        const double fr = std::floor((origin_lat - lat) / pixel_size);
        if (!(fc >= 0.0 && fr >= 0.0 && fc < width && fr < height)) return std::nullopt;
        return PixelIndex{static_cast<std::size_t>(fc), static_cast<std::size_t>(fr)};
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Checks the storage invariants: non-empty, positive pixel size, no
/// antimeridian crossing, and every row inside the Mercator latitude band.
inline void validate(const GridSpec& g) {
    if (g.width < 1 || g.height < 1)
        throw Error(ErrorCode::InvalidGrid, "grid must have at least one row and column");
    if (!(g.pixel_size > 0.0) || !std::isfinite(g.pixel_size))
        throw Error(ErrorCode::InvalidGrid, "pixel_size must be positive and finite");
    if (!std::isfinite(g.origin_lon) || !std::isfinite(g.origin_lat))
        throw Error(ErrorCode::InvalidGrid, "grid origin must be finite");
    const BoundingBox b = g.bounds();
    if (b.west < -180.0 || b.east > 180.0)
        throw Error(ErrorCode::UnsupportedExtent, "grid crosses the antimeridian or exceeds 360 degrees");
    if (b.north > kMaxMercatorLat || b.south < -kMaxMercatorLat)
        throw Error(ErrorCode::UnsupportedExtent, "grid rows fall outside the Web-Mercator latitude band");
}

template <typename T>
struct Plane {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<T> data;

    Plane() = default;
    Plane(std::uint32_t w, std::uint32_t h, T fill = T{}) : width(w), height(h), data(std::size_t{w} * h, fill) {}

    T& operator()(std::size_t col, std::size_t row) noexcept { return data[row * width + col]; }
    const T& operator()(std::size_t col, std::size_t row) const noexcept { return data[row * width + col]; }

    std::size_t size() const noexcept { return data.size(); }

    friend bool operator==(const Plane&, const Plane&) = default;
};

/// 0/1 per pixel. Kept as bytes so the plane can be handed out as a span.
using Mask = Plane<std::uint8_t>;
using FloatPlane = Plane<float>;

inline std::size_t count_set(const Mask& m) noexcept {
    return static_cast<std::size_t>(std::count_if(m.data.begin(), m.data.end(), [](std::uint8_t v) { return v != 0; }));
}

struct Band {
    std::string name;
    FloatPlane values;
};

/// Named float32 bands sharing one grid plus a validity plane; a pixel whose
/// validity byte is 0 is nodata in every band.
class Raster {
public:
    Raster() = default;
    explicit Raster(const GridSpec& grid) : grid_(grid), valid_(grid.width, grid.height, 1) {
        if (grid.width < 1 || grid.height < 1 || !(grid.pixel_size > 0.0))
            throw Error(ErrorCode::InvalidGrid, "raster grid must be non-empty with positive pixel size");
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::uint32_t width() const noexcept { return grid_.width; }
    std::uint32_t height() const noexcept { return grid_.height; }

    const std::deque<Band>& bands() const noexcept { return bands_; }

    bool has_band(std::string_view name) const noexcept { return find(name) != nullptr; }

    const FloatPlane& band(std::string_view name) const {
        if (const Band* b = find(name)) return b->values;
        throw Error(ErrorCode::MissingBand, "raster has no band '" + std::string(name) + "'", std::string(name));
    }
    FloatPlane& band(std::string_view name) {
        return const_cast<FloatPlane&>(std::as_const(*this).band(name));
    }

    FloatPlane& add_band(std::string name, float fill = 0.0f) {
        return add_band(std::move(name), FloatPlane(grid_.width, grid_.height, fill));
    }

    FloatPlane& add_band(std::string name, FloatPlane values) {
        if (values.width != grid_.width || values.height != grid_.height)
            throw Error(ErrorCode::ShapeMismatch, "band '" + name + "' does not match the raster grid", name);
        if (has_band(name))
            throw Error(ErrorCode::InvalidArgument, "duplicate band name '" + name + "'", name);
        bands_.push_back({std::move(name), std::move(values)});
        return bands_.back().values;
    }

    const Mask& valid() const noexcept { return valid_; }
    Mask& valid() noexcept { return valid_; }

    void set_valid(Mask m) {
        if (m.width != grid_.width || m.height != grid_.height)
            throw Error(ErrorCode::ShapeMismatch, "validity plane does not match the raster grid");
        valid_ = std::move(m);
    }

    bool is_valid(std::size_t col, std::size_t row) const noexcept { return valid_(col, row) != 0; }

    /// Bitwise equality of grid, band names, band bytes and validity bytes.
    friend bool bit_equal(const Raster& a, const Raster& b) noexcept {
        if (std::memcmp(&a.grid_.origin_lon, &b.grid_.origin_lon, sizeof(double)) != 0 ||
            std::memcmp(&a.grid_.origin_lat, &b.grid_.origin_lat, sizeof(double)) != 0 ||
            std::memcmp(&a.grid_.pixel_size, &b.grid_.pixel_size, sizeof(double)) != 0 ||
            a.grid_.width != b.grid_.width || a.grid_.height != b.grid_.height)
            return false;
        if (a.bands_.size() != b.bands_.size() || a.valid_.data != b.valid_.data) return false;
        for (std::size_t i = 0; i < a.bands_.size(); ++i) {
            const auto& x = a.bands_[i];
            const auto& y = b.bands_[i];
            if (x.name != y.name || x.values.size() != y.values.size()) return false;
            if (std::memcmp(x.values.data.data(), y.values.data.data(), x.values.size() * sizeof(float)) != 0)
                return false;
        }
        return true;
    }

private:
    const Band* find(std::string_view name) const noexcept {
        for (const auto& b : bands_)
            if (b.name == name) return &b;
        return nullptr;
    }

    GridSpec grid_{};
    std::deque<Band> bands_; // deque: add_band never invalidates references to earlier bands
    Mask valid_;
};

/// Exterior ring first, optional holes after. Rings are implicitly closed.
struct GeoPolygon {
    std::vector<std::vector<LonLat>> rings;

    BoundingBox bounds() const noexcept {
        BoundingBox b{1e300, 1e300, -1e300, -1e300};
        for (const auto& ring : rings)
            for (const auto& p : ring) {
                b.west = std::min(b.west, p.lon);
                b.east = std::max(b.east, p.lon);
                b.south = std::min(b.south, p.lat);
                b.north = std::max(b.north, p.lat);
            }
        return b;
    }
};

inline GeoPolygon rectangle_polygon(const BoundingBox& b) {
    return GeoPolygon{{{{b.west, b.north}, {b.east, b.north}, {b.east, b.south}, {b.west, b.south}}}};
}

inline void validate(const GeoPolygon& poly) {
    if (poly.rings.empty()) throw Error(ErrorCode::DegeneratePolygon, "polygon has no rings");
    for (const auto& ring : poly.rings) {
        if (ring.size() < 3)
            throw Error(ErrorCode::DegeneratePolygon, "polygon ring has fewer than 3 vertices");
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const LonLat& a = ring[i];
            const LonLat& b = ring[(i + 1) % ring.size()];
            if (!std::isfinite(a.lon) || !std::isfinite(a.lat))
                throw Error(ErrorCode::DegeneratePolygon, "polygon vertex is not finite");
            if (std::abs(b.lon - a.lon) > 180.0)
                throw Error(ErrorCode::UnsupportedExtent, "polygon edge crosses the antimeridian");
        }
    }
}

/// Marks every pixel whose center lies inside the polygon under the even-odd
/// rule. An edge counts as crossed by a row when exactly one endpoint lies
/// strictly above the row center; a center is inside when an odd number of
/// crossings lie strictly east of it.
namespace detail {

// True when every vertex lies on one line, up to rounding of the inputs.
inline bool ring_is_collinear(const std::vector<LonLat>& ring) {
    const LonLat& o = ring.front();
    const LonLat* far = &o;
    double far_d2 = 0.0;
    for (const LonLat& v : ring) {
        const double d2 = (v.lon - o.lon) * (v.lon - o.lon) + (v.lat - o.lat) * (v.lat - o.lat);
        if (d2 > far_d2) {
            far_d2 = d2;
            far = &v;
        }
    }
    if (far_d2 == 0.0) return true;
    const double dx = far->lon - o.lon, dy = far->lat - o.lat;
    for (const LonLat& v : ring) {
        const double vx = v.lon - o.lon, vy = v.lat - o.lat;
        const double cross = dx * vy - dy * vx;
        if (std::abs(cross) > 1e-12 * std::sqrt(far_d2 * (vx * vx + vy * vy))) return false;
    }
    return true;
}

} // namespace detail

inline Mask rasterize_polygon(const GeoPolygon& poly, const GridSpec& grid) {
    validate(poly);
    std::vector<const std::vector<LonLat>*> rings;
    for (const auto& ring : poly.rings)
        if (!detail::ring_is_collinear(ring)) rings.push_back(&ring); // zero-area rings cover nothing
    Mask out(grid.width, grid.height, 0);
    std::vector<double> xs;
    for (std::size_t row = 0; row < grid.height; ++row) {
        const double y = grid.center_lat(row);
        xs.clear();
        for (const auto* ring : rings) {
            for (std::size_t i = 0, j = ring->size() - 1; i < ring->size(); j = i++) {
                const LonLat& pi = (*ring)[i];
                const LonLat& pj = (*ring)[j];
                if ((pi.lat > y) != (pj.lat > y))
                    xs.push_back((pj.lon - pi.lon) * (y - pi.lat) / (pj.lat - pi.lat) + pi.lon);
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const double lo = xs[k];
            const double hi = xs[k + 1];
            // First column with center >= lo, then walk while center < hi.
            double guess = std::ceil((lo - grid.origin_lon) / grid.pixel_size - 0.5);
            std::size_t col = guess <= 0.0 ? 0 : static_cast<std::size_t>(std::min<double>(guess, grid.width));
            while (col > 0 && grid.center_lon(col - 1) >= lo) --col;
            while (col < grid.width && grid.center_lon(col) < lo) ++col;
            for (; col < grid.width && grid.center_lon(col) < hi; ++col) out(col, row) = 1;
        }
    }
    return out;
}

/// Sub-raster of the pixels whose centers fall inside `bbox` (edges
/// inclusive). Values are copied, never resampled.
inline Raster read_window(const Raster& raster, const BoundingBox& bbox) {
    const GridSpec& g = raster.grid();
    std::size_t c0 = g.width, c1 = 0, r0 = g.height, r1 = 0;
    for (std::size_t c = 0; c < g.width; ++c) {
        const double x = g.center_lon(c);
        if (x >= bbox.west && x <= bbox.east) {
            c0 = std::min(c0, c);
            c1 = c + 1;
        }
    }
    for (std::size_t r = 0; r < g.height; ++r) {
        const double y = g.center_lat(r);
        if (y >= bbox.south && y <= bbox.north) {
            r0 = std::min(r0, r);
            r1 = r + 1;
        }
    }
    if (c0 >= c1 || r0 >= r1)
        throw Error(ErrorCode::EmptyIntersection, "bounding box does not cover any pixel center of the raster");
    if (c0 == 0 && r0 == 0 && c1 == g.width && r1 == g.height) return raster;

    GridSpec sub = g;
    sub.origin_lon = g.origin_lon + static_cast<double>(c0) * g.pixel_size;
    sub.origin_lat = g.origin_lat - static_cast<double>(r0) * g.pixel_size;
    sub.width = static_cast<std::uint32_t>(c1 - c0);
    sub.height = static_cast<std::uint32_t>(r1 - r0);

    Raster out(sub);
    auto copy = [&](const auto& src, auto& dst) {
        for (std::size_t r = 0; r < sub.height; ++r)
            std::copy_n(&src(c0, r0 + r), sub.width, &dst(0, r));
    };
    for (const auto& b : raster.bands()) {
        FloatPlane values(sub.width, sub.height);
        copy(b.values, values);
        out.add_band(b.name, std::move(values));
    }
    copy(raster.valid(), out.valid());
    return out;
}

/// Nearest-neighbour lookup of `raster` at each pixel center of `target`.
/// Target pixels outside the source extent, or on invalid source pixels,
/// come out invalid with zero values.
inline Raster sample_nearest(const Raster& raster, const GridSpec& target) {
    if (raster.grid() == target) return raster;
    const GridSpec& src = raster.grid();
    Raster out(target);
    std::vector<std::pair<const FloatPlane*, FloatPlane*>> planes;
    for (const auto& b : raster.bands()) out.add_band(b.name);
    for (const auto& b : raster.bands()) planes.emplace_back(&b.values, &out.band(b.name));

    std::vector<std::optional<std::size_t>> cols(target.width), rows(target.height);
    for (std::size_t c = 0; c < target.width; ++c) {
        const double f = std::floor((target.center_lon(c) - src.origin_lon) / src.pixel_size);
        if (f >= 0.0 && f < src.width) cols[c] = static_cast<std::size_t>(f);
    }
    for (std::size_t r = 0; r < target.height; ++r) {
        const double f = std::floor((src.origin_lat - target.center_lat(r)) / src.pixel_size);
        if (f >= 0.0 && f < src.height) rows[r] = static_cast<std::size_t>(f);
    }
    for (std::size_t r = 0; r < target.height; ++r) {
        for (std::size_t c = 0; c < target.width; ++c) {
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
