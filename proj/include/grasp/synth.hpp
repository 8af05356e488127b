#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "grasp/catalog.hpp"
#include "grasp/engine.hpp"
#include "grasp/io.hpp"

// Deterministic synthetic scenes with exact ground truth.
//
// Randomness: std::mt19937_64 (its output sequence is fixed by the C++
// standard). Each concern draws from its own engine seeded with
// splitmix64(seed ^ stream). Uniform doubles take the top 53 bits of one
// draw; Gaussians use the cosine branch of Box-Muller on two uniforms;
// integers in [0, n) are draw % n. No <random> distribution is used, since
// their outputs differ between standard libraries.

namespace grasp::synth {

/// Pixel rectangle [col0, col1) x [row0, row1).
struct PixelRect {
    std::uint32_t col0 = 0, row0 = 0, col1 = 0, row1 = 0;

    std::uint32_t width() const noexcept { return col1 - col0; }
    std::uint32_t height() const noexcept { return row1 - row0; }
    bool contains(std::size_t c, std::size_t r) const noexcept { return c >= col0 && c < col1 && r >= row0 && r < row1; }

    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

inline BoundingBox rect_bounds(const PixelRect& r, const GridSpec& g) {
    return {g.origin_lon + r.col0 * g.pixel_size, g.origin_lat - r.row1 * g.pixel_size,
            g.origin_lon + r.col1 * g.pixel_size, g.origin_lat - r.row0 * g.pixel_size};
}

/// Rasterized through the same polygon path the engine uses for zonal stats.
inline Mask rect_mask(const PixelRect& r, const GridSpec& g) { return rasterize_polygon(rectangle_polygon(rect_bounds(r, g)), g); }

struct Reflectance {
    float red = 0, green = 0, blue = 0, nir = 0;
};

enum class EventKind { Construct, Destruct, PumiceRaft };

inline std::string_view to_string(EventKind k) noexcept {
    switch (k) {
    case EventKind::Construct: return "construct";
    case EventKind::Destruct: return "destruct";
    case EventKind::PumiceRaft: return "pumice_raft";
    }
    return "unknown";
}

struct Event {
    EventKind kind = EventKind::Construct;
    PixelRect rect;
    Date start{};
    double magnitude = 0.0; // dB for construct/destruct; unused for rafts
};

struct SarParams {
    Date start{};
    int count = 0;
    int cadence_days = 1;
    double background_db = -12.0;
    double speckle_sigma_db = 1.0;
};

struct OpticalParams {
    Date start{};
    int count = 0;
    int cadence_days = 1;
    double cloud_fraction = 0.0;
    double noise_sigma = 0.0;
    Reflectance sea{0.03f, 0.08f, 0.10f, 0.02f};
    Reflectance land{0.10f, 0.12f, 0.08f, 0.30f};
    Reflectance pumice{0.15f, 0.14f, 0.12f, 0.20f};
    Reflectance cloud{0.80f, 0.80f, 0.80f, 0.80f};
};

struct CalibrationParams {
    std::size_t per_class = kDefaultCalibrationSize;
    std::optional<Date> reference_date1;
    std::optional<Date> reference_date2;
};

struct SynthConfig {
    std::uint64_t seed = 0;
    GridSpec grid;
    std::optional<SarParams> sar;
    std::optional<OpticalParams> optical;
    std::vector<PixelRect> land;
    std::vector<Event> events;
    CalibrationParams calibration;
};

struct EventTruth {
    Event event;
    Mask mask;
};

struct SceneTruth {
    std::string scene_id;
    Sensor sensor = Sensor::SAR;
    Timestamp timestamp{};
    std::vector<PixelRect> cloud_rects;
    Mask cloud;
};

struct GroundTruth {
    std::vector<EventTruth> events;
    std::vector<SceneTruth> scenes;
    Mask land;
    std::optional<CalibrationSet> change_calibration;
    std::optional<PumiceCalibration> pumice_calibration;

    /// Union of the masks of all events of `kind`.
    Mask event_mask(EventKind kind, std::uint32_t width, std::uint32_t height) const {
        Mask out(width, height, 0);
        for (const auto& e : events)
            if (e.event.kind == kind)
                for (std::size_t i = 0; i < out.size(); ++i) out.data[i] |= e.mask.data[i];
        return out;
    }
};

struct SynthScene {
    std::string id;
    Sensor sensor = Sensor::SAR;
    Timestamp timestamp{};
    Raster raster;
};

struct SynthOutput {
    std::vector<SynthScene> scenes;
    std::optional<Raster> land;
    GroundTruth truth;
};

// ---------------------------------------------------------------------------
// randomness

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(splitmix64(seed ^ (stream * 0xd1b54a32d192ed03ULL))) {}

    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double gaussian() noexcept {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : engine_() % n; }

private:
    std::mt19937_64 engine_;
};

enum Stream : std::uint64_t { kSarStream = 1, kOpticalStream = 2, kCloudStream = 3, kCalibrationStream = 4 };

// ---------------------------------------------------------------------------
// config

namespace detail {

[[noreturn]] inline void invalid(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "invalid synth config field '" + field + "': " + why, field);
}

inline const nlohmann::json& need(const nlohmann::json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) invalid(path, "missing");
    return j.at(key);
}

template <typename T>
T number(const nlohmann::json& j, const std::string& key, const std::string& path, std::optional<T> fallback = {}) {
    if (!j.is_object() || !j.contains(key)) {
        if (fallback) return *fallback;
        invalid(path, "missing");
    }
    const auto& v = j.at(key);
    if (!v.is_number()) invalid(path, "must be a number");
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) invalid(path, "must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) invalid(path, "must be non-negative");
        }
    }
    return v.get<T>();
}

inline Date date_of(const nlohmann::json& j, const std::string& key, const std::string& path) {
    const auto& v = need(j, key, path);
    if (!v.is_string()) invalid(path, "must be an ISO-8601 date string");
    try {
        return parse_date(v.get<std::string>());
    } catch (const Error&) {
        invalid(path, "must be an ISO-8601 date string");
    }
}

inline PixelRect rect_of(const nlohmann::json& j, const GridSpec& g, const std::string& path) {
    if (!j.is_array() || j.size() != 4) invalid(path, "must be [col0, row0, col1, row1]");
    for (const auto& v : j)
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            invalid(path, "must hold non-negative integers");
    PixelRect r{j[0].get<std::uint32_t>(), j[1].get<std::uint32_t>(), j[2].get<std::uint32_t>(), j[3].get<std::uint32_t>()};
    if (r.col0 >= r.col1 || r.row0 >= r.row1) invalid(path, "must be non-empty");
    if (r.col1 > g.width || r.row1 > g.height) invalid(path, "must lie within the grid");
    return r;
}

inline Reflectance reflectance_of(const nlohmann::json& j, Reflectance base, const std::string& path) {
    if (!j.is_object()) invalid(path, "must be an object");
    base.red = number<float>(j, "red", path + ".red", base.red);
    base.green = number<float>(j, "green", path + ".green", base.green);
    base.blue = number<float>(j, "blue", path + ".blue", base.blue);
    base.nir = number<float>(j, "nir", path + ".nir", base.nir);
    return base;
}

} // namespace detail

inline SynthConfig config_from_json(const nlohmann::json& j) {
    using namespace detail;
    SynthConfig c;
    c.seed = number<std::uint64_t>(j, "seed", "seed");
    const auto& g = need(j, "grid", "grid");
    c.grid.origin_lon = number<double>(g, "origin_lon", "grid.origin_lon");
    c.grid.origin_lat = number<double>(g, "origin_lat", "grid.origin_lat");
    c.grid.pixel_size = number<double>(g, "pixel_size", "grid.pixel_size");
    c.grid.width = number<std::uint32_t>(g, "width", "grid.width");
    c.grid.height = number<std::uint32_t>(g, "height", "grid.height");
    try {
        validate(c.grid);
    } catch (const Error& e) {
        invalid("grid", e.what());
    }

    auto series = [&](const nlohmann::json& s, const std::string& p, Date& start, int& count, int& cadence) {
        start = date_of(s, "start", p + ".start");
        count = number<int>(s, "count", p + ".count");
        cadence = number<int>(s, "cadence_days", p + ".cadence_days", 1);
        if (count < 0) invalid(p + ".count", "must be non-negative");
        if (cadence < 1) invalid(p + ".cadence_days", "must be at least 1");
    };
    if (j.contains("sar")) {
        const auto& s = j["sar"];
        SarParams p;
        series(s, "sar", p.start, p.count, p.cadence_days);
        p.background_db = number<double>(s, "background_db", "sar.background_db", p.background_db);
        p.speckle_sigma_db = number<double>(s, "speckle_sigma_db", "sar.speckle_sigma_db", p.speckle_sigma_db);
        if (p.speckle_sigma_db < 0) invalid("sar.speckle_sigma_db", "must be non-negative");
        c.sar = p;
    }
    if (j.contains("optical")) {
        const auto& s = j["optical"];
        OpticalParams p;
        series(s, "optical", p.start, p.count, p.cadence_days);
        p.cloud_fraction = number<double>(s, "cloud_fraction", "optical.cloud_fraction", p.cloud_fraction);
        if (!(p.cloud_fraction >= 0.0 && p.cloud_fraction < 1.0)) invalid("optical.cloud_fraction", "must be in [0, 1)");
        p.noise_sigma = number<double>(s, "noise_sigma", "optical.noise_sigma", p.noise_sigma);
        if (p.noise_sigma < 0) invalid("optical.noise_sigma", "must be non-negative");
        if (s.contains("profiles")) {
            const auto& pr = s["profiles"];
            if (pr.contains("sea")) p.sea = reflectance_of(pr["sea"], p.sea, "optical.profiles.sea");
            if (pr.contains("land")) p.land = reflectance_of(pr["land"], p.land, "optical.profiles.land");
            if (pr.contains("pumice")) p.pumice = reflectance_of(pr["pumice"], p.pumice, "optical.profiles.pumice");
            if (pr.contains("cloud")) p.cloud = reflectance_of(pr["cloud"], p.cloud, "optical.profiles.cloud");
        }
        c.optical = p;
    }
    if (j.contains("land")) {
        if (!j["land"].is_array()) invalid("land", "must be an array of rectangles");
        for (std::size_t i = 0; i < j["land"].size(); ++i)
            c.land.push_back(rect_of(j["land"][i], c.grid, "land[" + std::to_string(i) + "]"));
    }
    if (j.contains("events")) {
        if (!j["events"].is_array()) invalid("events", "must be an array");
        for (std::size_t i = 0; i < j["events"].size(); ++i) {
            const auto& e = j["events"][i];
            const std::string p = "events[" + std::to_string(i) + "]";
            Event ev;
            const auto& kind = need(e, "kind", p + ".kind");
            if (kind == "construct") ev.kind = EventKind::Construct;
            else if (kind == "destruct") ev.kind = EventKind::Destruct;
            else if (kind == "pumice_raft") ev.kind = EventKind::PumiceRaft;
            else invalid(p + ".kind", "must be construct, destruct or pumice_raft");
            ev.rect = rect_of(need(e, "rect", p + ".rect"), c.grid, p + ".rect");
            ev.start = date_of(e, "start", p + ".start");
            ev.magnitude = number<double>(e, "magnitude", p + ".magnitude", 0.0);
            c.events.push_back(ev);
        }
    }
    if (j.contains("calibration")) {
        const auto& k = j["calibration"];
        c.calibration.per_class = number<std::size_t>(k, "per_class", "calibration.per_class", kDefaultCalibrationSize);
        if (c.calibration.per_class < 2) invalid("calibration.per_class", "must be at least 2");
        if (k.contains("reference")) {
            c.calibration.reference_date1 = date_of(k["reference"], "date1", "calibration.reference.date1");
            c.calibration.reference_date2 = date_of(k["reference"], "date2", "calibration.reference.date2");
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// generation

/// Random axis-aligned rectangles until coverage is within half a percentage
/// point of `fraction`.
inline std::vector<PixelRect> place_clouds(Rng& rng, std::uint32_t width, std::uint32_t height, double fraction,
                                           Mask& covered) {
    std::vector<PixelRect> rects;
    const double n = static_cast<double>(width) * height;
    const double target = fraction * n;
    const double tol = 0.005 * n;
    std::size_t count = 0;
    std::uint32_t max_w = std::max<std::uint32_t>(1, width / 4);
    std::uint32_t max_h = std::max<std::uint32_t>(1, height / 4);
    int rejected = 0;
    while (static_cast<double>(count) < target - tol) {
        const auto w = static_cast<std::uint32_t>(1 + rng.below(max_w));
        const auto h = static_cast<std::uint32_t>(1 + rng.below(max_h));
        const auto c0 = static_cast<std::uint32_t>(rng.below(width - w + 1));
        const auto r0 = static_cast<std::uint32_t>(rng.below(height - h + 1));
        const PixelRect r{c0, r0, c0 + w, r0 + h};
        std::size_t added = 0;
        for (std::uint32_t y = r.row0; y < r.row1; ++y)
            for (std::uint32_t x = r.col0; x < r.col1; ++x) added += covered(x, y) ? 0 : 1;
        if (static_cast<double>(count + added) > target + tol) {
            if (++rejected >= 16) {
                max_w = std::max<std::uint32_t>(1, max_w / 2);
                max_h = std::max<std::uint32_t>(1, max_h / 2);
                rejected = 0;
            }
            continue;
        }
        rejected = 0;
        for (std::uint32_t y = r.row0; y < r.row1; ++y)
            for (std::uint32_t x = r.col0; x < r.col1; ++x) covered(x, y) = 1;
        count += added;
        rects.push_back(r);
    }
    return rects;
}

namespace detail {

inline Timestamp nth_date(Date start, int cadence, int i) { return Timestamp{start + std::chrono::days{cadence * i}}; }

inline bool active(const Event& e, Timestamp ts) { return ts >= Timestamp{e.start}; }

inline LonLat pixel_center(const GridSpec& g, std::size_t col, std::size_t row) {
    return {g.center_lon(col), g.center_lat(row)};
}

// `n` pixel centers drawn uniformly (with replacement) from the set pixels.
inline std::vector<LonLat> draw_from(Rng& rng, const Mask& m, const GridSpec& g, std::size_t n) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m.data[i]) idx.push_back(i);
    std::vector<LonLat> out;
    if (idx.empty()) return out;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = idx[rng.below(idx.size())];
        out.push_back(pixel_center(g, i % g.width, i / g.width));
    }
    return out;
}

// Pixels within `margin` of the rectangle, excluding the rectangle itself.
inline Mask ring_around(const PixelRect& r, std::uint32_t margin, const GridSpec& g) {
    Mask m(g.width, g.height, 0);
    const std::uint32_t c0 = r.col0 > margin ? r.col0 - margin : 0;
    const std::uint32_t r0 = r.row0 > margin ? r.row0 - margin : 0;
    const std::uint32_t c1 = std::min(g.width, r.col1 + margin);
    const std::uint32_t r1 = std::min(g.height, r.row1 + margin);
    for (std::uint32_t y = r0; y < r1; ++y)
        for (std::uint32_t x = c0; x < c1; ++x) m(x, y) = r.contains(x, y) ? 0 : 1;
    return m;
}

} // namespace detail

/// Calibration for SAR change: half of each class is drawn inside that
/// class's event rectangles, half from a surrounding band of unchanged
/// pixels, so each class sample mixes changed and stable ground.
inline std::optional<CalibrationSet> change_calibration(const SynthConfig& cfg, const GroundTruth& truth) {
    Rng rng(cfg.seed, kCalibrationStream);
    const GridSpec& g = cfg.grid;
    Mask any_event(g.width, g.height, 0);
    for (const auto& e : truth.events)
        if (e.event.kind != EventKind::PumiceRaft)
            for (std::size_t i = 0; i < any_event.size(); ++i) any_event.data[i] |= e.mask.data[i];

    auto class_points = [&](EventKind kind) {
        Mask inside(g.width, g.height, 0), around(g.width, g.height, 0);
        for (const auto& e : truth.events) {
            if (e.event.kind != kind) continue;
            for (std::size_t i = 0; i < inside.size(); ++i) inside.data[i] |= e.mask.data[i];
            const std::uint32_t margin = std::max<std::uint32_t>(2, std::min(e.event.rect.width(), e.event.rect.height()) / 2);
            const Mask ring = detail::ring_around(e.event.rect, margin, g);
            for (std::size_t i = 0; i < around.size(); ++i) around.data[i] |= ring.data[i] && !any_event.data[i];
        }
        const std::size_t n_in = cfg.calibration.per_class / 2;
        auto pts = detail::draw_from(rng, inside, g, n_in);
        auto out = detail::draw_from(rng, around, g, cfg.calibration.per_class - n_in);
        pts.insert(pts.end(), out.begin(), out.end());
        return pts;
    };
    CalibrationSet c;
    c.constructed = class_points(EventKind::Construct);
    c.destructed = class_points(EventKind::Destruct);
    if (c.constructed.empty() || c.destructed.empty()) return std::nullopt;
    c.reference_date1 = cfg.calibration.reference_date1;
    c.reference_date2 = cfg.calibration.reference_date2;
    return c;
}

/// Calibration for pumice: `per_class` raft pixels and `per_class` open-sea pixels.
inline std::optional<PumiceCalibration> pumice_calibration(const SynthConfig& cfg, const GroundTruth& truth) {
    const GridSpec& g = cfg.grid;
    Mask raft = truth.event_mask(EventKind::PumiceRaft, g.width, g.height);
    if (count_set(raft) == 0) return std::nullopt;
    Rng rng(cfg.seed, kCalibrationStream + 100);
    Mask sea(g.width, g.height, 0);
    for (std::size_t i = 0; i < sea.size(); ++i) {
        sea.data[i] = !raft.data[i] && !truth.land.data[i];
        raft.data[i] = raft.data[i] && !truth.land.data[i];
    }
    PumiceCalibration c{detail::draw_from(rng, raft, g, cfg.calibration.per_class),
                        detail::draw_from(rng, sea, g, cfg.calibration.per_class)};
    if (c.pumice.empty() || c.non_pumice.empty()) return std::nullopt;
    return c;
}

inline SynthOutput generate_scenes(const SynthConfig& cfg) {
    validate(cfg.grid);
    const GridSpec& g = cfg.grid;
    SynthOutput out;
    GroundTruth& truth = out.truth;
    for (const auto& e : cfg.events) truth.events.push_back({e, rect_mask(e.rect, g)});
    truth.land = Mask(g.width, g.height, 0);
    for (const auto& r : cfg.land) {
        const Mask m = rect_mask(r, g);
        for (std::size_t i = 0; i < m.size(); ++i) truth.land.data[i] |= m.data[i];
    }

    if (cfg.sar) {
        const SarParams& p = *cfg.sar;
        Rng rng(cfg.seed, kSarStream);
        for (int i = 0; i < p.count; ++i) {
            const Timestamp ts = detail::nth_date(p.start, p.cadence_days, i);
            std::vector<double> base(g.pixel_count(), p.background_db);
            for (const auto& e : truth.events) {
                if (e.event.kind == EventKind::PumiceRaft || !detail::active(e.event, ts)) continue;
                const double delta = e.event.kind == EventKind::Construct ? std::abs(e.event.magnitude)
                                                                          : -std::abs(e.event.magnitude);
                for (std::size_t k = 0; k < base.size(); ++k)
                    if (e.mask.data[k]) base[k] += delta;
            }
            Raster r(g);
            FloatPlane& vv = r.add_band("vv");
            for (std::size_t k = 0; k < base.size(); ++k) {
                double v = base[k];
                if (p.speckle_sigma_db > 0) v += p.speckle_sigma_db * rng.gaussian();
                vv.data[k] = static_cast<float>(v);
            }
            const std::string id = scene_id_for(Sensor::SAR, ts, "synth_" + std::to_string(i));
            truth.scenes.push_back({id, Sensor::SAR, ts, {}, Mask(g.width, g.height, 0)});
            out.scenes.push_back({id, Sensor::SAR, ts, std::move(r)});
        }
    }

    if (cfg.optical) {
        const OpticalParams& p = *cfg.optical;
        Rng noise(cfg.seed, kOpticalStream);
        Rng clouds(cfg.seed, kCloudStream);
        for (int i = 0; i < p.count; ++i) {
            const Timestamp ts = detail::nth_date(p.start, p.cadence_days, i);
            Mask raft(g.width, g.height, 0);
            for (const auto& e : truth.events)
                if (e.event.kind == EventKind::PumiceRaft && detail::active(e.event, ts))
                    for (std::size_t k = 0; k < raft.size(); ++k) raft.data[k] |= e.mask.data[k];

            Mask cloud(g.width, g.height, 0);
            auto rects = p.cloud_fraction > 0 ? place_clouds(clouds, g.width, g.height, p.cloud_fraction, cloud)
                                               : std::vector<PixelRect>{};

            Raster r(g);
            FloatPlane& red = r.add_band("red");
            FloatPlane& green = r.add_band("green");
            FloatPlane& blue = r.add_band("blue");
            FloatPlane& nir = r.add_band("nir");
            FloatPlane& cl = r.add_band("cloud");
            auto jitter = [&](float v) {
                if (p.noise_sigma <= 0) return v;
                return static_cast<float>(std::max(0.0, v + p.noise_sigma * noise.gaussian()));
            };
            for (std::size_t k = 0; k < g.pixel_count(); ++k) {
                const Reflectance& base = truth.land.data[k] ? p.land : raft.data[k] ? p.pumice : p.sea;
                // Noise is drawn for every pixel so the stream does not depend on cloud placement.
                const float rr = jitter(base.red), gg = jitter(base.green), bb = jitter(base.blue), nn = jitter(base.nir);
                if (cloud.data[k]) {
                    red.data[k] = p.cloud.red;
                    green.data[k] = p.cloud.green;
                    blue.data[k] = p.cloud.blue;
                    nir.data[k] = p.cloud.nir;
                    cl.data[k] = 1.0f;
                } else {
                    red.data[k] = rr;
                    green.data[k] = gg;
                    blue.data[k] = bb;
                    nir.data[k] = nn;
                }
            }
            const std::string id = scene_id_for(Sensor::OPTICAL, ts, "synth_" + std::to_string(i));
            truth.scenes.push_back({id, Sensor::OPTICAL, ts, std::move(rects), std::move(cloud)});
            out.scenes.push_back({id, Sensor::OPTICAL, ts, std::move(r)});
        }
        Raster land(g);
        FloatPlane& lb = land.add_band(std::string(kLandBand));
        for (std::size_t k = 0; k < lb.size(); ++k) lb.data[k] = truth.land.data[k] ? 1.0f : 0.0f;
        out.land = std::move(land);
    }

    truth.change_calibration = change_calibration(cfg, truth);
    truth.pumice_calibration = pumice_calibration(cfg, truth);
    return out;
}

inline nlohmann::json truth_to_json(const GroundTruth& t, const GridSpec& g) {
    auto rect_json = [](const PixelRect& r) { return nlohmann::json::array({r.col0, r.row0, r.col1, r.row1}); };
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : t.events)
        events.push_back({{"kind", to_string(e.event.kind)},
                          {"rect", rect_json(e.event.rect)},
                          {"bbox", bbox_to_json(rect_bounds(e.event.rect, g))},
                          {"onset", format_date(e.event.start)},
                          {"magnitude", e.event.magnitude},
                          {"pixels", count_set(e.mask)}});
    nlohmann::json scenes = nlohmann::json::array();
    for (const auto& s : t.scenes) {
        nlohmann::json rects = nlohmann::json::array();
        for (const auto& r : s.cloud_rects) rects.push_back(rect_json(r));
        scenes.push_back({{"id", s.scene_id},
                          {"sensor", grasp::to_string(s.sensor)},
                          {"timestamp", format_timestamp(s.timestamp)},
                          {"cloud_pixels", count_set(s.cloud)},
                          {"cloud_rects", std::move(rects)}});
    }
    return {{"events", std::move(events)}, {"scenes", std::move(scenes)}, {"land_pixels", count_set(t.land)}};
}

/// Writes the catalog layout (manifest, scenes, land mask) plus
/// ground_truth.json and any calibration files under `dir`.
inline GroundTruth generate(const SynthConfig& cfg, const std::filesystem::path& dir) {
    SynthOutput out = generate_scenes(cfg);
    create_catalog(dir);
    Manifest manifest;
    for (const auto& s : out.scenes)
        store_scene(dir, manifest, encode_container(s.raster), s.sensor, s.timestamp, s.id);
    if (out.land) {
        write_container(*out.land, dir / "static" / "land_mask.grsp");
        manifest.land_mask = "static/land_mask.grsp";
    }
    save_manifest(dir, std::move(manifest));

    auto write_json = [&](const std::string& name, const nlohmann::json& j) {
        const std::string text = j.dump(2) + "\n";
        write_file_bytes(dir / name, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    };
    write_json("ground_truth.json", truth_to_json(out.truth, cfg.grid));
    if (out.truth.change_calibration) write_json("calibration_change.json", to_json(*out.truth.change_calibration));
    if (out.truth.pumice_calibration) write_json("calibration_pumice.json", to_json(*out.truth.pumice_calibration));
    return std::move(out.truth);
}

// ---------------------------------------------------------------------------
// scoring

struct MaskScore {
    double iou = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// IoU, precision and recall of `predicted` against `truth`. Empty against
/// empty scores 1 on every metric; an empty prediction has precision 1 and
/// an empty truth has recall 1.
inline MaskScore score_masks(const Mask& predicted, const Mask& truth) {
    if (predicted.width != truth.width || predicted.height != truth.height)
        throw Error(ErrorCode::ShapeMismatch, "masks differ in shape");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted.data[i] != 0, t = truth.data[i] != 0;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
    }
    const auto ratio = [](std::size_t num, std::size_t den) { return den == 0 ? 1.0 : static_cast<double>(num) / den; };
    return {ratio(tp, tp + fp + fn), ratio(tp, tp + fp), ratio(tp, tp + fn)};
}

} // namespace grasp::synth
