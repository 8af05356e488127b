#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grasp/catalog.hpp"
#include "grasp/otsu.hpp"
#include "grasp/raster.hpp"
#include "grasp/time.hpp"

namespace grasp {

inline constexpr int kOpticalWindowDays = 14;
inline constexpr int kSarWindowDays = 12;
inline constexpr int kPumiceSearchDays = 2;
inline constexpr std::size_t kDefaultCalibrationSize = 100;

/// Sampled areas of built-up gain (constructed) and loss (destructed), in
/// lon/lat. When both reference dates are set, thresholds are derived from
/// the difference between those dates instead of the dates being compared,
/// so a calibration can be reused across date pairs.
struct CalibrationSet {
    std::vector<LonLat> constructed;
    std::vector<LonLat> destructed;
    std::optional<Date> reference_date1;
    std::optional<Date> reference_date2;
};

struct PumiceCalibration {
    std::vector<LonLat> pumice;
    std::vector<LonLat> non_pumice;
};

struct ThresholdPair {
    double blue = 0.0;
    double red = 0.0;
};

struct ChangeLayer {
    Mask blue_mask;
    Mask red_mask;
    ThresholdPair thresholds;
    GridSpec grid;
};

struct PumiceLayer {
    Mask mask;
    double threshold = 0.0;
    GridSpec grid;
    std::string scene_id;
};

struct TimeSample {
    Timestamp timestamp{};
    std::optional<double> mean;
    std::size_t valid_pixels = 0;
};

using TimeSeries = std::vector<TimeSample>;

struct DateRange {
    Date first{};
    Date last{};
};

inline std::vector<std::string_view> composite_bands(Sensor sensor) {
    if (sensor == Sensor::SAR) return {kSarBands.begin(), kSarBands.end()};
    return {"red", "green", "blue", "nir"};
}

/// Median of `values` (reordered in place); even counts give the midpoint
/// of the two middle values.
inline float median_in_place(std::span<float> values) {
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const float upper = values[mid];
    if (n % 2 == 1) return upper;
    const float lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return static_cast<float>((static_cast<double>(lower) + static_cast<double>(upper)) / 2.0);
}

/// Per-pixel temporal median of the scenes in the stack. Optical
/// observations flagged cloudy are dropped first; pixels left with no
/// observation are nodata. All scenes are sampled onto the grid of the
/// first one.
inline Raster composite_stack(std::span<const Raster* const> stack, Sensor sensor) {
    if (stack.empty()) throw Error(ErrorCode::NoScenesInWindow, "no scenes to composite");
    const GridSpec grid = stack.front()->grid();
    const auto names = composite_bands(sensor);

    std::vector<Raster> aligned;
    aligned.reserve(stack.size());
    for (const Raster* r : stack) aligned.push_back(sample_nearest(*r, grid));

    std::vector<Mask> usable;
    for (const Raster& r : aligned) {
        Mask m = r.valid();
        if (sensor == Sensor::OPTICAL) {
            const FloatPlane& cloud = r.band("cloud");
            for (std::size_t i = 0; i < m.size(); ++i)
                if (cloud.data[i] >= 0.5f) m.data[i] = 0;
        }
        usable.push_back(std::move(m));
    }

    Raster out(grid);
    std::vector<float> obs;
    obs.reserve(aligned.size());
    for (auto name : names) {
        std::vector<const FloatPlane*> planes;
        for (const Raster& r : aligned) planes.push_back(&r.band(name));
        FloatPlane result(grid.width, grid.height);
        for (std::size_t i = 0; i < grid.pixel_count(); ++i) {
            obs.clear();
            for (std::size_t s = 0; s < planes.size(); ++s)
                if (usable[s].data[i]) obs.push_back(planes[s]->data[i]);
            if (obs.empty()) {
                out.valid().data[i] = 0;
                continue;
            }
            result.data[i] = median_in_place(obs);
        }
        out.add_band(std::string(name), std::move(result));
    }
    return out;
}

inline Raster temporal_composite(const Catalog& catalog, Sensor sensor, const DateWindow& window,
                                 const BoundingBox& bbox) {
    validate(window);
    const auto scenes = catalog.query(sensor, window, bbox);
    if (scenes.empty())
        throw Error(ErrorCode::NoScenesInWindow, std::string("no ") + std::string(to_string(sensor)) +
                                                     " scenes between " + format_date(window.first()) + " and " +
                                                     format_date(window.last()));
    std::vector<Raster> windows;
    windows.reserve(scenes.size());
    for (const auto& s : scenes) windows.push_back(read_window(s->data(), bbox));
    std::vector<const Raster*> stack;
    for (const auto& w : windows) stack.push_back(&w);
    return composite_stack(stack, sensor);
}

inline Raster temporal_composite(const Catalog& catalog, Sensor sensor, Date date, int window_days,
                                 const BoundingBox& bbox) {
    return temporal_composite(catalog, sensor, DateWindow::symmetric(date, window_days), bbox);
}

/// Per-pixel composite2 - composite1 of band "vv" on the common valid
/// footprint, returned as a one-band ("diff") raster on the first grid.
inline Raster difference(const Raster& first, const Raster& second) {
    const Raster aligned = sample_nearest(second, first.grid());
    const FloatPlane& a = first.band("vv");
    const FloatPlane& b = aligned.band("vv");
    Raster out(first.grid());
    FloatPlane& d = out.add_band("diff");
    for (std::size_t i = 0; i < d.size(); ++i) {
        const bool ok = first.valid().data[i] && aligned.valid().data[i];
        out.valid().data[i] = ok ? 1 : 0;
        d.data[i] = ok ? b.data[i] - a.data[i] : 0.0f;
    }
    return out;
}

/// Values of `plane` at the calibration points, snapped to the containing
/// pixel. Points outside the grid or on masked pixels are skipped.
inline std::vector<float> sample_points(const FloatPlane& plane, const Mask& usable, const GridSpec& grid,
                                        std::span<const LonLat> points) {
    std::vector<float> out;
    out.reserve(points.size());
    for (const LonLat& p : points)
        if (const auto px = grid.locate(p.lon, p.lat); px && usable(px->col, px->row))
            out.push_back(plane(px->col, px->row));
    return out;
}

namespace detail {

inline double labelled_otsu(std::span<const float> samples, const std::string& label, OtsuTie tie = OtsuTie::Lowest) {
    if (samples.size() < 2)
        throw Error(ErrorCode::DegenerateSamples,
                    "calibration class '" + label + "' resolves to fewer than 2 valid pixels", label);
    try {
        return otsu_threshold(samples, tie);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateSamples) throw;
        throw Error(ErrorCode::DegenerateSamples, "calibration class '" + label + "': " + e.what(), label);
    }
}

} // namespace detail

/// Tied Otsu edges resolve toward the smaller mask: the highest edge for
/// blue (D >= t), the lowest for red (D <= t).
inline ThresholdPair thresholds_from_samples(std::span<const float> constructed, std::span<const float> destructed) {
    ThresholdPair t{detail::labelled_otsu(constructed, "constructed", OtsuTie::Highest),
                    detail::labelled_otsu(destructed, "destructed", OtsuTie::Lowest)};
    if (!(t.blue > t.red))
        throw Error(ErrorCode::CalibrationInconsistent,
                    "blue threshold " + std::to_string(t.blue) + " is not above red threshold " + std::to_string(t.red));
    return t;
}

inline ThresholdPair thresholds_from_difference(const Raster& diff, const CalibrationSet& calib) {
    const FloatPlane& d = diff.band("diff");
    const auto c = sample_points(d, diff.valid(), diff.grid(), calib.constructed);
    const auto x = sample_points(d, diff.valid(), diff.grid(), calib.destructed);
    return thresholds_from_samples(c, x);
}

/// Blue where the difference reaches the blue threshold, red where it falls
/// to the red one; nodata pixels are in neither.
inline ChangeLayer classify_change(const Raster& diff, const ThresholdPair& t) {
    if (!(t.blue > t.red)) throw Error(ErrorCode::CalibrationInconsistent, "blue threshold must exceed red threshold");
    const GridSpec& g = diff.grid();
    ChangeLayer layer{Mask(g.width, g.height, 0), Mask(g.width, g.height, 0), t, g};
    const FloatPlane& d = diff.band("diff");
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!diff.valid().data[i]) continue;
        const double v = d.data[i];
        layer.blue_mask.data[i] = v >= t.blue ? 1 : 0;
        layer.red_mask.data[i] = v <= t.red ? 1 : 0;
    }
    return layer;
}

inline Raster sar_difference(const Catalog& catalog, Date date1, Date date2, const BoundingBox& bbox,
                             int sar_window_days) {
    const Raster c1 = temporal_composite(catalog, Sensor::SAR, date1, sar_window_days, bbox);
    const Raster c2 = temporal_composite(catalog, Sensor::SAR, date2, sar_window_days, bbox);
    return difference(c1, c2);
}

/// SAR change between two dates: composites, dB difference, Otsu thresholds
/// from the calibration classes, then blue (gain) / red (loss) masks.
inline ChangeLayer sar_change(const Catalog& catalog, Date date1, Date date2, const CalibrationSet& calib,
                              const BoundingBox& bbox, int sar_window_days = kSarWindowDays) {
    const Raster diff = sar_difference(catalog, date1, date2, bbox, sar_window_days);
    ThresholdPair t;
    if (calib.reference_date1 && calib.reference_date2 &&
        (*calib.reference_date1 != date1 || *calib.reference_date2 != date2))
        t = thresholds_from_difference(
            sar_difference(catalog, *calib.reference_date1, *calib.reference_date2, bbox, sar_window_days), calib);
    else
        t = thresholds_from_difference(diff, calib);
    return classify_change(diff, t);
}

/// (green - nir) / (green + nir); nodata where either input is nodata or
/// the denominator is zero.
inline FloatPlane ndwi(const FloatPlane& green, const FloatPlane& nir, Mask& valid) {
    if (green.width != nir.width || green.height != nir.height || valid.width != green.width ||
        valid.height != green.height)
        throw Error(ErrorCode::ShapeMismatch, "NDWI inputs must share a grid");
    FloatPlane out(green.width, green.height);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double g = green.data[i];
        const double n = nir.data[i];
        const double sum = g + n;
        if (!valid.data[i] || sum == 0.0) {
            valid.data[i] = 0;
            continue;
        }
        out.data[i] = static_cast<float>((g - n) / sum);
    }
    return out;
}

/// One-band ("ndwi") raster from an optical raster's green and nir bands.
inline Raster ndwi(const Raster& optical) {
    Raster out(optical.grid());
    Mask valid = optical.valid();
    FloatPlane values = ndwi(optical.band("green"), optical.band("nir"), valid);
    out.add_band("ndwi", std::move(values));
    out.set_valid(std::move(valid));
    return out;
}

/// Optical scene closest in calendar days to `date` within the search
/// window; the earlier one wins a tie.
inline SceneRef nearest_scene(const Catalog& catalog, Sensor sensor, Date date, int search_days,
                              const BoundingBox& bbox) {
    SceneRef best;
    long best_gap = 0;
    for (const auto& s : catalog.query(sensor, DateWindow::symmetric(date, search_days), bbox)) {
        const auto day = std::chrono::floor<std::chrono::days>(s->entry.timestamp);
        const long gap = std::labs(static_cast<long>((day - date).count()));
        if (!best || gap < best_gap) {
            best = s;
            best_gap = gap;
        }
    }
    if (!best)
        throw Error(ErrorCode::NoScenesInWindow, std::string("no ") + std::string(to_string(sensor)) +
                                                     " scene within " + std::to_string(search_days) + " days of " +
                                                     format_date(date));
    return best;
}

/// Floating-pumice mask for a single optical scene: NDWI below the Otsu cut
/// of the pooled calibration NDWI values, off cloud and off land.
inline PumiceLayer detect_pumice(const Catalog& catalog, Date date, const PumiceCalibration& calib,
                                 const BoundingBox& bbox, int search_days = kPumiceSearchDays) {
    const SceneRef scene = nearest_scene(catalog, Sensor::OPTICAL, date, search_days, bbox);
    const Raster window = read_window(scene->data(), bbox);
    const GridSpec& g = window.grid();
    const Raster index = ndwi(window);
    const FloatPlane& n = index.band("ndwi");
    const FloatPlane& cloud = window.band("cloud");
    const Mask land = catalog.land_on(g);

    Mask clear = index.valid();
    for (std::size_t i = 0; i < clear.size(); ++i)
        if (cloud.data[i] >= 0.5f) clear.data[i] = 0;

    const auto p = sample_points(n, clear, g, calib.pumice);
    const auto np = sample_points(n, clear, g, calib.non_pumice);
    if (p.size() < 2)
        throw Error(ErrorCode::DegenerateSamples, "calibration class 'pumice' resolves to fewer than 2 clear pixels",
                    "pumice");
    if (np.size() < 2)
        throw Error(ErrorCode::DegenerateSamples,
                    "calibration class 'non_pumice' resolves to fewer than 2 clear pixels", "non_pumice");
    std::vector<float> pooled(p);
    pooled.insert(pooled.end(), np.begin(), np.end());
    const double t = detail::labelled_otsu(pooled, "pumice+non_pumice");

    PumiceLayer out{Mask(g.width, g.height, 0), t, g, scene->entry.id};
    for (std::size_t i = 0; i < out.mask.size(); ++i)
        out.mask.data[i] = clear.data[i] && !land.data[i] && n.data[i] < t ? 1 : 0;
    return out;
}

/// Mean of `band` over the valid pixels whose centers fall in the polygon,
/// one sample per scene (ascending time). Cloudy optical pixels are not
/// valid. Scenes the polygon touches but with no valid pixel report a count
/// of zero and no mean.
inline TimeSeries zonal_timeseries(const Catalog& catalog, const GeoPolygon& poly, Sensor sensor = Sensor::SAR,
                                   std::string_view band = "vv", std::optional<DateRange> range = std::nullopt) {
    validate(poly);
    const BoundingBox pb = poly.bounds();
    TimeSeries series;
    std::size_t footprint_total = 0;
    for (const auto& s : catalog.scenes()) {
        const SceneEntry& e = s->entry;
        if (e.sensor != sensor) continue;
        if (range) {
            const auto day = std::chrono::floor<std::chrono::days>(e.timestamp);
            if (day < range->first || day > range->last) continue;
        }
        if (!(pb.west <= e.bbox.east && e.bbox.west <= pb.east && pb.south <= e.bbox.north && e.bbox.south <= pb.north))
            continue;
        const Raster& r = s->data();
        const Mask footprint = rasterize_polygon(poly, r.grid());
        const std::size_t inside = count_set(footprint);
        if (inside == 0) continue;
        footprint_total += inside;

        const FloatPlane& values = r.band(band);
        const FloatPlane* cloud = sensor == Sensor::OPTICAL ? &r.band("cloud") : nullptr;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!footprint.data[i] || !r.valid().data[i]) continue;
            if (cloud && cloud->data[i] >= 0.5f) continue;
            sum += values.data[i];
            ++count;
        }
        TimeSample sample{e.timestamp, std::nullopt, count};
        if (count > 0) sample.mean = sum / static_cast<double>(count);
        series.push_back(sample);
    }
    if (footprint_total == 0)
        throw Error(ErrorCode::EmptyPolygonFootprint, "polygon covers no pixel center on any scene");
    return series;
}

} // namespace grasp
