#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "grasp/raster.hpp"
#include "grasp/synth.hpp"

namespace grasp::test {

namespace fs = std::filesystem;

inline fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::path(GRASP_TEST_TMP) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

/// Random bands (some with odd names), random validity.
inline Raster random_raster(std::mt19937_64& rng, std::uint32_t w, std::uint32_t h, int bands) {
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    std::uniform_real_distribution<float> value(-1000.0f, 1000.0f);
    GridSpec g{coord(rng), coord(rng), 0.001 * (1 + rng() % 100), w, h};
    Raster r(g);
    for (int b = 0; b < bands; ++b) {
        FloatPlane& p = r.add_band("band_" + std::to_string(b) + (b % 2 ? "_ünï" : ""));
        for (auto& v : p.data) v = value(rng);
    }
    for (auto& v : r.valid().data) v = (rng() % 7) != 0;
    return r;
}

/// Classic crossing-number point-in-polygon test on one point.
inline bool point_in_polygon(const GeoPolygon& poly, double x, double y) {
    bool inside = false;
    for (const auto& ring : poly.rings) {
        const std::size_t n = ring.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const double xi = ring[i].lon, yi = ring[i].lat, xj = ring[j].lon, yj = ring[j].lat;
            if (((yi > y) != (yj > y)) && (x < (xj - xi) * (y - yi) / (yj - yi) + xi)) inside = !inside;
        }
    }
    return inside;
}

inline Mask brute_force_rasterize(const GeoPolygon& poly, const GridSpec& g) {
    Mask m(g.width, g.height, 0);
    for (std::size_t r = 0; r < g.height; ++r)
        for (std::size_t c = 0; c < g.width; ++c) m(c, r) = point_in_polygon(poly, g.center_lon(c), g.center_lat(r));
    return m;
}

/// Otsu edge by exhaustive search: every one of the 255 candidate cuts is
/// scored from the raw samples and compared by exact cross-multiplication.
/// Returns the index of the last low bin; ties go to the lowest edge unless
/// `highest` is set.
inline int brute_force_otsu_bin(const std::vector<float>& samples, bool highest = false) {
    double lo = samples[0], hi = samples[0];
    for (float v : samples) {
        lo = std::min<double>(lo, v);
        hi = std::max<double>(hi, v);
    }
    std::vector<int> bins;
    bins.reserve(samples.size());
    for (float v : samples) {
        const double f = std::floor((v - lo) * 256.0 / (hi - lo));
        bins.push_back(f > 255.0 ? 255 : static_cast<int>(f));
    }
    using u128 = unsigned __int128;
    u128 best_num = 0, best_den = 1;
    int best = 0;
    for (int k = 0; k < 255; ++k) {
        std::uint64_t n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (int b : bins) {
            if (b <= k) {
                ++n0;
                s0 += static_cast<std::uint64_t>(b);
            } else {
                ++n1;
                s1 += static_cast<std::uint64_t>(b);
            }
        }
        if (n0 == 0 || n1 == 0) continue;
        const u128 a = u128{s0} * n1, c = u128{s1} * n0;
        const u128 d = a > c ? a - c : c - a;
        const u128 num = d * d, den = u128{n0} * n1;
        if (num * best_den > best_num * den || (highest && num * best_den == best_num * den)) {
            best_num = num;
            best_den = den;
            best = k;
        }
    }
    return best;
}

/// Two-component Gaussian mixture with random weights, means and spreads.
inline std::vector<float> mixture_samples(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double w = 0.1 + 0.8 * u(rng);
    std::normal_distribution<double> a(-5.0 + 10.0 * u(rng), 0.2 + 3.0 * u(rng));
    std::normal_distribution<double> b(-5.0 + 10.0 * u(rng), 0.2 + 3.0 * u(rng));
    std::vector<float> out(n);
    for (auto& v : out) v = static_cast<float>(u(rng) < w ? a(rng) : b(rng));
    out[0] = -20.0f; // keep the range non-degenerate
    return out;
}

/// 512x512 SAR catalog: 12 scenes every 4 days from 2021-01-01, a +6 dB
/// construct and a -6 dB destruct rectangle switching on at 2021-01-25.
/// date1 = 2021-01-09 and date2 = 2021-02-06 each see six scenes within
/// +-12 days, all on one side of the onset.
inline nlohmann::json change_config_json(std::uint64_t seed = 20211001, double sigma = 1.0) {
    return {
        {"seed", seed},
        {"grid", {{"origin_lon", 139.70}, {"origin_lat", 35.70}, {"pixel_size", 1e-4}, {"width", 512}, {"height", 512}}},
        {"sar",
         {{"start", "2021-01-01"}, {"count", 12}, {"cadence_days", 4}, {"background_db", -12.0}, {"speckle_sigma_db", sigma}}},
        {"events",
         {{{"kind", "construct"}, {"rect", {100, 100, 200, 200}}, {"start", "2021-01-25"}, {"magnitude", 6.0}},
          {{"kind", "destruct"}, {"rect", {300, 320, 420, 400}}, {"start", "2021-01-25"}, {"magnitude", 6.0}}}},
        {"calibration", {{"per_class", 100}, {"reference", {{"date1", "2021-01-09"}, {"date2", "2021-02-06"}}}}},
    };
}

inline constexpr const char* kChangeDate1 = "2021-01-09";
inline constexpr const char* kChangeDate2 = "2021-02-06";
inline constexpr const char* kChangeOnset = "2021-01-25";

/// 256x256 optical catalog: five scenes every 5 days from 2021-10-20, a land
/// strip on the west edge and a pumice raft present from the first scene.
inline nlohmann::json pumice_config_json(std::uint64_t seed = 20211028, double cloud_fraction = 0.15) {
    return {
        {"seed", seed},
        {"grid", {{"origin_lon", 127.60}, {"origin_lat", 26.40}, {"pixel_size", 2e-4}, {"width", 256}, {"height", 256}}},
        {"optical",
         {{"start", "2021-10-20"}, {"count", 5}, {"cadence_days", 5}, {"cloud_fraction", cloud_fraction}, {"noise_sigma", 0.01}}},
        {"land", {{0, 0, 60, 256}}},
        {"events", {{{"kind", "pumice_raft"}, {"rect", {120, 100, 180, 140}}, {"start", "2021-10-20"}}}},
        {"calibration", {{"per_class", 100}}},
    };
}

inline constexpr const char* kPumiceDate = "2021-10-30";

} // namespace grasp::test
