#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "grasp/raster.hpp"
#include "test_support.hpp"

using namespace grasp;

namespace {

GridSpec unit_grid(std::uint32_t n = 64) { return {10.0, 20.0, 1.0 / n, n, n}; }

GeoPolygon random_convex(std::mt19937_64& rng, const GridSpec& g) {
    const BoundingBox b = g.bounds();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double cx = b.west + (b.east - b.west) * (0.3 + 0.4 * u(rng));
    const double cy = b.south + (b.north - b.south) * (0.3 + 0.4 * u(rng));
    const double rad = (b.east - b.west) * (0.1 + 0.35 * u(rng));
    std::vector<double> angles(3 + rng() % 8);
    for (auto& a : angles) a = 2 * std::numbers::pi * u(rng);
    std::sort(angles.begin(), angles.end());
    GeoPolygon p;
    p.rings.emplace_back();
    for (double a : angles) p.rings[0].push_back({cx + rad * std::cos(a), cy + rad * std::sin(a)});
    return p;
}

double shoelace(const std::vector<LonLat>& ring) {
    double a = 0;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++)
        a += (ring[j].lon - ring[i].lon) * (ring[j].lat + ring[i].lat);
    return std::abs(a) / 2;
}

double perimeter(const std::vector<LonLat>& ring) {
    double p = 0;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++)
        p += std::hypot(ring[j].lon - ring[i].lon, ring[j].lat - ring[i].lat);
    return p;
}

} // namespace

TEST(GridSpec, ValidationRejectsBadGrids) {
    EXPECT_NO_THROW(validate(unit_grid()));
    GridSpec g = unit_grid();
    g.width = 0;
    EXPECT_THROW(validate(g), Error);
    g = unit_grid();
    g.pixel_size = -1;
    EXPECT_THROW(validate(g), Error);

    GridSpec across{179.5, 10.0, 0.1, 10, 10};
    try {
        validate(across);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedExtent);
    }
    GridSpec polar{0.0, 86.0, 0.1, 10, 10};
    EXPECT_THROW(validate(polar), Error);
}

TEST(GridSpec, LocateFindsContainingPixel) {
    const GridSpec g = unit_grid(4);
    EXPECT_EQ(g.locate(g.center_lon(2), g.center_lat(3)), (PixelIndex{2, 3}));
    EXPECT_EQ(g.locate(10.0, 20.0), (PixelIndex{0, 0}));
    EXPECT_FALSE(g.locate(9.99, 19.9).has_value());
    EXPECT_FALSE(g.locate(10.1, 20.01).has_value());
}

TEST(RasterizePolygon, FullCover) {
    const GridSpec g = unit_grid();
    const BoundingBox b = g.bounds();
    const GeoPolygon big = rectangle_polygon({b.west - 1, b.south - 1, b.east + 1, b.north + 1});
    EXPECT_EQ(count_set(rasterize_polygon(big, g)), g.pixel_count());
}

TEST(RasterizePolygon, CollinearPolygonIsEmpty) {
    const GridSpec g = unit_grid();
    GeoPolygon line{{{{10.1, 19.1}, {10.5, 19.5}, {10.9, 19.9}}}};
    EXPECT_EQ(count_set(rasterize_polygon(line, g)), 0u);
    GeoPolygon flat{{{{10.1, 19.5}, {10.5, 19.5}, {10.9, 19.5}}}};
    EXPECT_EQ(count_set(rasterize_polygon(flat, g)), 0u);
}

TEST(RasterizePolygon, DegenerateRingThrows) {
    GeoPolygon two{{{{0, 0}, {1, 1}}}};
    try {
        rasterize_polygon(two, unit_grid());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegeneratePolygon);
    }
}

TEST(RasterizePolygon, AntimeridianEdgeRejected) {
    GeoPolygon p{{{{179.0, 0.0}, {-179.0, 0.0}, {-179.0, 1.0}}}};
    try {
        rasterize_polygon(p, unit_grid());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsupportedExtent);
    }
}

TEST(RasterizePolygon, MatchesBruteForceOnRandomConvexPolygons) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const GridSpec g{-3.0 + (rng() % 100) * 0.01, 40.0, 0.01 + (rng() % 10) * 0.003,
                         static_cast<std::uint32_t>(16 + rng() % 80), static_cast<std::uint32_t>(16 + rng() % 80)};
        const GeoPolygon poly = random_convex(rng, g);
        const Mask fast = rasterize_polygon(poly, g);
        const Mask slow = test::brute_force_rasterize(poly, g);
        ASSERT_EQ(fast.data, slow.data) << "trial " << trial;
    }
}

TEST(RasterizePolygon, EvenOddHole) {
    const GridSpec g = unit_grid(40);
    GeoPolygon donut = rectangle_polygon({10.1, 19.1, 10.9, 19.9});
    donut.rings.push_back(rectangle_polygon({10.3, 19.3, 10.7, 19.7}).rings[0]);
    const Mask m = rasterize_polygon(donut, g);
    EXPECT_EQ(m.data, test::brute_force_rasterize(donut, g).data);
    const auto center = g.locate(10.5, 19.5);
    EXPECT_EQ(m(center->col, center->row), 0);
    const auto rim = g.locate(10.2, 19.5);
    EXPECT_EQ(m(rim->col, rim->row), 1);
}

TEST(RasterizePolygon, AreaConvergesAsPixelsShrink) {
    const std::vector<std::vector<LonLat>> shapes{
        {{0.13, 0.21}, {0.87, 0.17}, {0.61, 0.93}},
        {{0.2, 0.2}, {0.8, 0.25}, {0.75, 0.8}, {0.15, 0.7}},
        {{0.5, 0.05}, {0.93, 0.4}, {0.77, 0.91}, {0.23, 0.91}, {0.07, 0.4}},
    };
    for (const auto& ring : shapes) {
        const GeoPolygon poly{{ring}};
        const double area = shoelace(ring);
        const double bound_per_ps = perimeter(ring) / area;
        double first = 0, last = 0;
        for (std::uint32_t n : {32u, 64u, 128u, 256u, 512u}) {
            const GridSpec g{0.0, 1.0, 1.0 / n, n, n};
            const double est = count_set(rasterize_polygon(poly, g)) * g.pixel_size * g.pixel_size;
            const double rel = std::abs(est - area) / area;
            // Boundary pixels bound the error: it shrinks at least linearly with pixel size.
            EXPECT_LE(rel, bound_per_ps * g.pixel_size) << "n=" << n;
            if (n == 32) first = rel;
            last = rel;
        }
        EXPECT_LT(last, first);
    }
}

TEST(ReadWindow, FullExtentIsIdentity) {
    std::mt19937_64 rng(1);
    const Raster r = test::random_raster(rng, 20, 10, 2);
    EXPECT_TRUE(bit_equal(read_window(r, r.grid().bounds()), r));
}

TEST(ReadWindow, SinglePixelCell) {
    std::mt19937_64 rng(2);
    const Raster r = test::random_raster(rng, 20, 10, 1);
    const GridSpec& g = r.grid();
    const BoundingBox cell{g.origin_lon + 5 * g.pixel_size, g.origin_lat - 4 * g.pixel_size,
                           g.origin_lon + 6 * g.pixel_size, g.origin_lat - 3 * g.pixel_size};
    const Raster w = read_window(r, cell);
    ASSERT_EQ(w.width(), 1u);
    ASSERT_EQ(w.height(), 1u);
    EXPECT_EQ(w.bands()[0].values(0, 0), r.bands()[0].values(5, 3));
    EXPECT_EQ(w.valid()(0, 0), r.valid()(5, 3));
}

TEST(ReadWindow, HalfExtentFollowsCenterInclusion) {
    const GridSpec g{0.0, 10.0, 0.1, 512, 16};
    Raster r(g);
    r.add_band("x");
    const BoundingBox b = g.bounds();
    const BoundingBox west_half{b.west, b.south, (b.west + b.east) / 2, b.north};
    // Oracle: count columns whose centers fall inside the box.
    std::uint32_t expected = 0;
    for (std::size_t c = 0; c < g.width; ++c) expected += g.center_lon(c) <= west_half.east;
    const Raster w = read_window(r, west_half);
    EXPECT_EQ(w.width(), expected);
    EXPECT_EQ(w.width(), 256u);
    EXPECT_EQ(w.height(), g.height);
}

TEST(ReadWindow, Idempotent) {
    std::mt19937_64 rng(3);
    const Raster r = test::random_raster(rng, 40, 30, 2);
    const BoundingBox b = r.grid().bounds();
    const BoundingBox box{b.west + 0.23 * (b.east - b.west), b.south + 0.1 * (b.north - b.south),
                          b.west + 0.71 * (b.east - b.west), b.south + 0.64 * (b.north - b.south)};
    const Raster once = read_window(r, box);
    const Raster twice = read_window(once, box);
    EXPECT_EQ(twice.width(), once.width());
    EXPECT_EQ(twice.height(), once.height());
    EXPECT_EQ(twice.valid().data, once.valid().data);
    EXPECT_EQ(twice.bands()[1].values.data, once.bands()[1].values.data);
}

TEST(ReadWindow, DisjointBoxThrows) {
    std::mt19937_64 rng(4);
    const Raster r = test::random_raster(rng, 5, 5, 1);
    const BoundingBox b = r.grid().bounds();
    try {
        read_window(r, {b.east + 1, b.south, b.east + 2, b.north});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyIntersection);
    }
}

TEST(SampleNearest, SameGridIsIdentityAndOffGridIsMasked) {
    std::mt19937_64 rng(5);
    const Raster r = test::random_raster(rng, 8, 8, 1);
    EXPECT_TRUE(bit_equal(sample_nearest(r, r.grid()), r));

    GridSpec shifted = r.grid();
    shifted.origin_lon += 4 * shifted.pixel_size;
    const Raster s = sample_nearest(r, shifted);
    for (std::size_t row = 0; row < 8; ++row) {
        for (std::size_t c = 0; c < 4; ++c) {
            EXPECT_EQ(s.valid()(c, row), r.valid()(c + 4, row));
            if (s.valid()(c, row)) EXPECT_EQ(s.bands()[0].values(c, row), r.bands()[0].values(c + 4, row));
        }
        for (std::size_t c = 4; c < 8; ++c) EXPECT_EQ(s.valid()(c, row), 0);
    }
}

TEST(Raster, BandRules) {
    Raster r(unit_grid(4));
    r.add_band("a");
    EXPECT_THROW(r.add_band("a"), Error);
    EXPECT_THROW(r.add_band("b", FloatPlane(3, 3)), Error);
    try {
        r.band("missing");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingBand);
        EXPECT_EQ(e.detail(), "missing");
    }
}
