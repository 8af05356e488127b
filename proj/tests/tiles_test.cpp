#include <random>
#include <set>

#include <gtest/gtest.h>

#include "grasp/tiles.hpp"
#include "test_support.hpp"

using namespace grasp;

TEST(LonLatToTile, KnownTiles) {
    EXPECT_EQ(lonlat_to_tile(0, 0, 0), (TileKey{0, 0, 0}));
    EXPECT_EQ(lonlat_to_tile(0, 0, 1), (TileKey{1, 1, 1}));
    EXPECT_EQ(lonlat_to_tile(-179.9, 85.0, 1), (TileKey{1, 0, 0}));
    EXPECT_EQ(lonlat_to_tile(179.9, -85.0, 2), (TileKey{2, 3, 3}));
}

TEST(LonLatToTile, RejectsOutOfRange) {
    for (auto [lon, lat, z] : std::vector<std::tuple<double, double, int>>{
             {180.0, 0, 3}, {-180.1, 0, 3}, {0, 85.06, 3}, {0, -86, 3}, {0, 0, -1}, {0, 0, 23}}) {
        try {
            lonlat_to_tile(lon, lat, z);
            FAIL() << lon << "," << lat << "," << z;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
        }
    }
}

TEST(TileBounds, WorldAndQuadrant) {
    const BoundingBox world = tile_bounds({0, 0, 0});
    EXPECT_EQ(world.west, -180.0);
    EXPECT_EQ(world.east, 180.0);
    EXPECT_NEAR(world.north, kMaxMercatorLat, 1e-12);
    EXPECT_NEAR(world.south, -kMaxMercatorLat, 1e-12);

    const BoundingBox nw = tile_bounds({1, 0, 0});
    EXPECT_EQ(nw.west, -180.0);
    EXPECT_EQ(nw.east, 0.0);
    EXPECT_NEAR(nw.south, 0.0, 1e-12);
    EXPECT_NEAR(nw.north, kMaxMercatorLat, 1e-12);
}

TEST(TileBounds, InvalidKeyThrows) {
    EXPECT_THROW(tile_bounds({1, 2, 0}), Error);
    EXPECT_THROW(tile_bounds({23, 0, 0}), Error);
}

TEST(TileBounds, ZoomLevelsPartitionTheWorld) {
    for (int z : {1, 2, 3, 5}) {
        const std::uint32_t n = 1u << z;
        const BoundingBox world = tile_bounds({0, 0, 0});
        for (std::uint32_t x = 0; x < n; ++x) {
            for (std::uint32_t y = 0; y < n; ++y) {
                const BoundingBox b = tile_bounds({z, x, y});
                if (x == 0) EXPECT_EQ(b.west, world.west);
                if (x + 1 == n) EXPECT_EQ(b.east, world.east);
                if (y == 0) EXPECT_EQ(b.north, world.north);
                if (y + 1 == n) EXPECT_EQ(b.south, world.south);
                if (x + 1 < n) EXPECT_EQ(b.east, tile_bounds({z, x + 1, y}).west);
                if (y + 1 < n) EXPECT_EQ(b.south, tile_bounds({z, x, y + 1}).north);
                EXPECT_TRUE(b.is_valid());
            }
        }
    }
}

TEST(LonLatToTile, RoundTripContainment) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lon(-180.0, 180.0), lat(-85.05, 85.05);
    for (int i = 0; i < 1000; ++i) {
        const double x = lon(rng), y = lat(rng);
        const int z = static_cast<int>(rng() % 23);
        const BoundingBox b = tile_bounds(lonlat_to_tile(x, y, z));
        EXPECT_GE(x, b.west - 1e-9);
        EXPECT_LE(x, b.east + 1e-9);
        EXPECT_GE(y, b.south - 1e-9);
        EXPECT_LE(y, b.north + 1e-9);
    }
}

TEST(ResampleToTile, ConstantStaysConstant) {
    const TileKey key = lonlat_to_tile(139.75, 35.68, 12);
    const BoundingBox tb = tile_bounds(key);
    GridSpec g{tb.west - 0.01, tb.north + 0.01, 0.0005, 400, 400};
    Raster r(g);
    r.add_band("vv", -7.25f);
    const Raster t = resample_to_tile(r, key);
    EXPECT_EQ(t.width(), kTileSize);
    EXPECT_EQ(count_set(t.valid()), t.valid().size());
    for (float v : t.band("vv").data) EXPECT_EQ(v, -7.25f);
}

TEST(ResampleToTile, CheckerboardAtTileResolution) {
    // Near the equator Mercator rows are uniform in latitude to far below a pixel.
    const TileKey key{12, 2048, 2047};
    const BoundingBox tb = tile_bounds(key);
    const double ps = (tb.east - tb.west) / kTileSize;
    GridSpec g{tb.west, tb.north, ps, kTileSize, kTileSize};
    Raster r(g);
    FloatPlane& p = r.add_band("v");
    for (std::size_t y = 0; y < kTileSize; ++y)
        for (std::size_t x = 0; x < kTileSize; ++x) p(x, y) = static_cast<float>((x + y) % 2);
    const Raster t = resample_to_tile(r, key);
    EXPECT_EQ(t.band("v").data, p.data);
    EXPECT_EQ(count_set(t.valid()), t.valid().size());
}

TEST(ResampleToTile, NoNewValuesAndMaskPreserved) {
    std::mt19937_64 rng(12);
    const TileKey key = lonlat_to_tile(5.0, 5.0, 9);
    const BoundingBox tb = tile_bounds(key);
    GridSpec g{tb.west + 0.1 * (tb.east - tb.west), tb.north - 0.05 * (tb.north - tb.south), 0.0021, 200, 180};
    Raster r(g);
    FloatPlane& p = r.add_band("v");
    for (auto& v : p.data) v = static_cast<float>(rng() % 100000) / 7.0f;
    for (auto& m : r.valid().data) m = rng() % 5 != 0;
    std::set<float> valid_values;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (r.valid().data[i]) valid_values.insert(p.data[i]);

    const Raster t = resample_to_tile(r, key);
    std::size_t valid_out = 0;
    for (std::size_t i = 0; i < t.valid().size(); ++i) {
        if (!t.valid().data[i]) continue;
        ++valid_out;
        EXPECT_TRUE(valid_values.count(t.band("v").data[i]));
    }
    EXPECT_GT(valid_out, 0u);
    EXPECT_LT(valid_out, t.valid().size()); // the raster covers only part of the tile
}

TEST(ResampleToTile, DisjointTileThrows) {
    GridSpec g{10.0, 10.0, 0.01, 10, 10};
    Raster r(g);
    r.add_band("v");
    EXPECT_THROW(resample_to_tile(r, lonlat_to_tile(-50, -50, 6)), Error);
}
