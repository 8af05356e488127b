#pragma once

#include <algorithm>
#include <charconv>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "grasp/catalog.hpp"
#include "grasp/engine.hpp"
#include "grasp/hash.hpp"
#include "grasp/io.hpp"
#include "grasp/png.hpp"
#include "grasp/tiles.hpp"

namespace grasp::service {

using nlohmann::json;

enum class LayerKind { RgbComposite, SarChange, Pumice, SarIntensity };

inline std::string_view to_string(LayerKind k) noexcept {
    switch (k) {
    case LayerKind::RgbComposite: return "rgb_composite";
    case LayerKind::SarChange: return "sar_change";
    case LayerKind::Pumice: return "pumice";
    case LayerKind::SarIntensity: return "sar_intensity";
    }
    return "unknown";
}

struct RenderStyle {
    Rgba blue{0, 0, 255, 180};
    Rgba red{255, 0, 0, 180};
    Rgba pumice{255, 0, 0, 200};
    double rgb_lo = 0.0;
    double rgb_hi = 0.3;
    double sar_lo = -25.0;
    double sar_hi = 0.0;
};

/// Validated, normalized layer request. `canonical` holds only the fields
/// that influence the result, so equivalent requests hash identically.
struct LayerSpec {
    LayerKind kind = LayerKind::SarChange;
    std::optional<Date> date;
    std::optional<Date> date1;
    std::optional<Date> date2;
    int window_days = 0;
    std::optional<BoundingBox> bbox;
    std::optional<CalibrationSet> calibration;
    std::optional<PumiceCalibration> pumice_calibration;
    RenderStyle style;
    json canonical;
};

namespace detail {

[[noreturn]] inline void bad_field(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, "invalid layer spec field '" + field + "': " + why, field);
}

inline Date spec_date(const json& j, const std::string& field) {
    if (!j.contains(field)) bad_field(field, "missing");
    if (!j[field].is_string()) bad_field(field, "must be an ISO-8601 date");
    try {
        return parse_date(j[field].get<std::string>());
    } catch (const Error&) {
        bad_field(field, "must be an ISO-8601 date");
    }
}

inline int spec_int(const json& j, const std::string& field, int fallback) {
    if (!j.contains(field)) return fallback;
    if (!j[field].is_number_integer() || j[field].get<long long>() < 0 || j[field].get<long long>() > 3660)
        bad_field(field, "must be a non-negative integer number of days");
    return j[field].get<int>();
}

inline std::pair<double, double> spec_range(const json& j, const std::string& field, double lo, double hi) {
    if (!j.contains(field)) return {lo, hi};
    const json& v = j[field];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() || !(v[0].get<double>() < v[1].get<double>()))
        bad_field(field, "must be [lo, hi] with lo < hi");
    return {v[0].get<double>(), v[1].get<double>()};
}

template <typename Fn>
auto nested(const std::string& field, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidArgument) throw;
        bad_field(field + (e.detail().empty() ? "" : "." + e.detail()), e.what());
    }
}

} // namespace detail

inline LayerSpec parse_layer_spec(const json& j) {
    using namespace detail;
    if (!j.is_object()) bad_field("kind", "layer spec must be a JSON object");
    if (!j.contains("kind") || !j["kind"].is_string()) bad_field("kind", "missing");
    const std::string kind = j["kind"].get<std::string>();
    LayerSpec s;
    json c{{"kind", kind}};
    if (kind == "sar_change") {
        s.kind = LayerKind::SarChange;
        s.date1 = spec_date(j, "date1");
        s.date2 = spec_date(j, "date2");
        s.window_days = spec_int(j, "window_days", kSarWindowDays);
        if (!j.contains("calibration")) bad_field("calibration", "missing");
        s.calibration = nested("calibration", [&] { return calibration_from_json(j["calibration"]); });
        c["date1"] = format_date(*s.date1);
        c["date2"] = format_date(*s.date2);
        c["calibration"] = to_json(*s.calibration);
    } else if (kind == "pumice") {
        s.kind = LayerKind::Pumice;
        s.date = spec_date(j, "date");
        s.window_days = spec_int(j, "window_days", kPumiceSearchDays);
        if (!j.contains("calibration")) bad_field("calibration", "missing");
        s.pumice_calibration = nested("calibration", [&] { return pumice_calibration_from_json(j["calibration"]); });
        c["date"] = format_date(*s.date);
        c["calibration"] = to_json(*s.pumice_calibration);
    } else if (kind == "rgb_composite") {
        s.kind = LayerKind::RgbComposite;
        s.date = spec_date(j, "date");
        s.window_days = spec_int(j, "window_days", kOpticalWindowDays);
        std::tie(s.style.rgb_lo, s.style.rgb_hi) = spec_range(j, "stretch", 0.0, 0.3);
        c["date"] = format_date(*s.date);
        c["stretch"] = {s.style.rgb_lo, s.style.rgb_hi};
    } else if (kind == "sar_intensity") {
        s.kind = LayerKind::SarIntensity;
        s.date = spec_date(j, "date");
        s.window_days = spec_int(j, "window_days", kSarWindowDays);
        std::tie(s.style.sar_lo, s.style.sar_hi) = spec_range(j, "range", -25.0, 0.0);
        c["date"] = format_date(*s.date);
        c["range"] = {s.style.sar_lo, s.style.sar_hi};
    } else {
        bad_field("kind", "must be one of rgb_composite, sar_change, pumice, sar_intensity");
    }
    c["window_days"] = s.window_days;
    if (j.contains("bbox")) {
        s.bbox = nested("bbox", [&] { return bbox_from_json(j["bbox"]); });
        c["bbox"] = bbox_to_json(*s.bbox);
    }
    s.canonical = std::move(c);
    return s;
}

/// A computed layer: the analysis raster the tiles are cut from, plus the
/// values resolved at creation (thresholds, source scene).
struct Layer {
    std::string id;
    LayerSpec spec;
    Raster data;
    json info;
};

inline Layer compute_layer(const Catalog& catalog, const LayerSpec& spec, std::string id) {
    const auto extent = catalog.extent();
    if (!extent && !spec.bbox) throw Error(ErrorCode::NoScenesInWindow, "catalog holds no scenes");
    const BoundingBox bbox = spec.bbox ? *spec.bbox : *extent;
    Layer layer{std::move(id), spec, Raster{}, json::object()};
    switch (spec.kind) {
    case LayerKind::SarChange: {
        const ChangeLayer change = sar_change(catalog, *spec.date1, *spec.date2, *spec.calibration, bbox, spec.window_days);
        Raster r(change.grid);
        FloatPlane& blue = r.add_band("blue");
        FloatPlane& red = r.add_band("red");
        for (std::size_t i = 0; i < blue.size(); ++i) {
            blue.data[i] = change.blue_mask.data[i];
            red.data[i] = change.red_mask.data[i];
        }
        layer.info = {{"threshold_blue", change.thresholds.blue},
                      {"threshold_red", change.thresholds.red},
                      {"blue_pixels", count_set(change.blue_mask)},
                      {"red_pixels", count_set(change.red_mask)}};
        layer.data = std::move(r);
        break;
    }
    case LayerKind::Pumice: {
        const PumiceLayer p = detect_pumice(catalog, *spec.date, *spec.pumice_calibration, bbox, spec.window_days);
        Raster r(p.grid);
        FloatPlane& m = r.add_band("pumice");
        for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = p.mask.data[i];
        layer.info = {{"threshold", p.threshold}, {"scene_id", p.scene_id}, {"pumice_pixels", count_set(p.mask)}};
        layer.data = std::move(r);
        break;
    }
    case LayerKind::RgbComposite:
        layer.data = temporal_composite(catalog, Sensor::OPTICAL, *spec.date, spec.window_days, bbox);
        break;
    case LayerKind::SarIntensity:
        layer.data = temporal_composite(catalog, Sensor::SAR, *spec.date, spec.window_days, bbox);
        break;
    }
    layer.info["kind"] = to_string(spec.kind);
    layer.info["bbox"] = bbox_to_json(layer.data.grid().bounds());
    return layer;
}

inline std::uint8_t stretch(double v, double lo, double hi) {
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(t * 255.0));
}

/// RGBA pixels of one tile; transparent wherever the layer has no data or
/// nothing to show.
inline std::vector<Rgba> render_tile(const Layer& layer, const TileKey& key, std::uint32_t size = kTileSize) {
    std::vector<Rgba> px(std::size_t{size} * size);
    Raster tile;
    try {
        tile = resample_to_tile(layer.data, key, size);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::EmptyIntersection) return px;
        throw;
    }
    const RenderStyle& st = layer.spec.style;
    const Mask& valid = tile.valid();
    switch (layer.spec.kind) {
    case LayerKind::SarChange: {
        const FloatPlane& blue = tile.band("blue");
        const FloatPlane& red = tile.band("red");
        for (std::size_t i = 0; i < px.size(); ++i) {
            if (!valid.data[i]) continue;
            if (blue.data[i] != 0.0f) px[i] = st.blue;
            else if (red.data[i] != 0.0f) px[i] = st.red;
        }
        break;
    }
    case LayerKind::Pumice: {
        const FloatPlane& m = tile.band("pumice");
        for (std::size_t i = 0; i < px.size(); ++i)
            if (valid.data[i] && m.data[i] != 0.0f) px[i] = st.pumice;
        break;
    }
    case LayerKind::RgbComposite: {
        const FloatPlane& r = tile.band("red");
        const FloatPlane& g = tile.band("green");
        const FloatPlane& b = tile.band("blue");
        for (std::size_t i = 0; i < px.size(); ++i)
            if (valid.data[i])
                px[i] = {stretch(r.data[i], st.rgb_lo, st.rgb_hi), stretch(g.data[i], st.rgb_lo, st.rgb_hi),
                         stretch(b.data[i], st.rgb_lo, st.rgb_hi), 255};
        break;
    }
    case LayerKind::SarIntensity: {
        const FloatPlane& vv = tile.band("vv");
        for (std::size_t i = 0; i < px.size(); ++i)
            if (valid.data[i]) {
                const std::uint8_t v = stretch(vv.data[i], st.sar_lo, st.sar_hi);
                px[i] = {v, v, v, 255};
            }
        break;
    }
    }
    return px;
}

/// Bounded least-recently-used map of computed layers.
class LayerCache {
public:
    explicit LayerCache(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

    std::shared_ptr<const Layer> get(const std::string& id) {
        std::lock_guard lock(mutex_);
        auto it = index_.find(id);
        if (it == index_.end()) return nullptr;
        order_.splice(order_.begin(), order_, it->second);
        return it->second->second;
    }

    /// Inserts unless present; returns whichever layer ends up cached.
    std::shared_ptr<const Layer> insert(std::shared_ptr<const Layer> layer) {
        std::lock_guard lock(mutex_);
        if (auto it = index_.find(layer->id); it != index_.end()) {
            order_.splice(order_.begin(), order_, it->second);
            return it->second->second;
        }
        order_.emplace_front(layer->id, layer);
        index_[layer->id] = order_.begin();
        while (order_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
        return layer;
    }

    void clear() {
        std::lock_guard lock(mutex_);
        order_.clear();
        index_.clear();
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return order_.size();
    }

    std::size_t capacity() const noexcept { return capacity_; }

private:
    using Entry = std::pair<std::string, std::shared_ptr<const Layer>>;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<Entry> order_;
    std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::string etag;
};

inline int http_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DegeneratePolygon:
    case ErrorCode::EmptyPolygonFootprint:
    case ErrorCode::UnsupportedExtent:
    case ErrorCode::OutOfRange:
    case ErrorCode::InvalidGrid:
    case ErrorCode::MissingBand:
        return 422;
    case ErrorCode::CalibrationInconsistent:
    case ErrorCode::DegenerateSamples:
        return 409;
    case ErrorCode::NoScenesInWindow:
    case ErrorCode::EmptyIntersection:
        return 404;
    default:
        return 500;
    }
}

inline Response json_response(int status, const json& body) { return {status, "application/json", body.dump(), {}}; }

inline Response error_response(int status, std::string_view code, const std::string& message,
                               const std::string& field = {}) {
    json body{{"error", code}, {"message", message}};
    if (!field.empty()) body["field"] = field;
    return json_response(status, body);
}

inline Response error_response(const Error& e) {
    return error_response(http_status(e.code()), e.name(), e.what(), e.detail());
}

struct ServiceOptions {
    std::size_t cache_layers = 64;
    std::string basemap_url = "https://tile.openstreetmap.org/{z}/{x}/{y}.png";
};

/// Request handling for the tile/analysis API, independent of the HTTP
/// transport. Catalog snapshots are swapped whole; handlers copy the
/// current pointer and never observe a partial reload.
class TileService {
public:
    explicit TileService(std::filesystem::path catalog_root, ServiceOptions options = {})
        : root_(std::move(catalog_root)), options_(std::move(options)), cache_(options_.cache_layers) {
        reload();
    }

    /// Re-reads the catalog. On failure the service keeps answering 503
    /// until a later reload succeeds.
    void reload() {
        std::shared_ptr<const Catalog> next;
        std::string err;
        try {
            next = std::make_shared<const Catalog>(Catalog::open(root_));
        } catch (const std::exception& e) {
            err = e.what();
        }
        std::unique_lock lock(state_mutex_);
        catalog_ = std::move(next);
        load_error_ = err;
        cache_.clear();
    }

    std::shared_ptr<const Catalog> catalog() const {
        std::shared_lock lock(state_mutex_);
        return catalog_;
    }

    LayerCache& cache() noexcept { return cache_; }

    Response handle(std::string_view method, std::string_view path, std::string_view body = {},
                    std::string_view if_none_match = {}) {
        try {
            if (method == "GET" && path == "/config") return config();
            auto cat = catalog();
            if (!cat) {
                std::shared_lock lock(state_mutex_);
                return error_response(503, "CatalogUnavailable", "catalog not loaded: " + load_error_);
            }
            if (method == "GET" && path == "/catalog") return catalog_summary(*cat);
            if (method == "GET" && path.starts_with("/tiles/")) return tile(*cat, path.substr(7), if_none_match);
            if (method == "GET" && path.starts_with("/layers/")) return layer_info(*cat, std::string(path.substr(8)));
            if (method == "POST") {
                json req = json::parse(body.begin(), body.end(), nullptr, false);
                if (req.is_discarded()) return error_response(400, "BadRequest", "request body is not valid JSON");
                if (path == "/layers") return create_layer(*cat, req);
                if (path == "/analysis/timeseries") return timeseries(*cat, req);
                if (path == "/analysis/pumice") return pumice(*cat, req);
            }
            return error_response(404, "NotFound", "no route for " + std::string(method) + " " + std::string(path));
        } catch (const Error& e) {
            return error_response(e);
        } catch (const std::exception& e) {
            return error_response(500, "InternalError", e.what());
        }
    }

    /// Creates (or finds) the layer for a validated spec.
    std::shared_ptr<const Layer> layer_for(const Catalog& cat, const LayerSpec& spec) {
        const std::string id = layer_id(cat, spec);
        if (auto hit = cache_.get(id)) return hit;
        auto layer = std::make_shared<const Layer>(compute_layer(cat, spec, id));
        {
            std::lock_guard lock(specs_mutex_);
            specs_.emplace(id, spec);
        }
        return cache_.insert(std::move(layer));
    }

    static std::string layer_id(const Catalog& cat, const LayerSpec& spec) {
        return Fnv1a().update(spec.canonical.dump()).update(cat.version()).hex();
    }

private:
    Response config() const {
        return json_response(200, {{"api_base", ""}, {"basemap_url", options_.basemap_url}, {"tile_size", kTileSize}});
    }

    static Response catalog_summary(const Catalog& cat) {
        json scenes = json::array();
        std::map<std::string, json> sensors;
        for (const auto& s : cat.scenes()) {
            const SceneEntry& e = s->entry;
            const std::string ts = format_timestamp(e.timestamp);
            scenes.push_back({{"id", e.id}, {"sensor", grasp::to_string(e.sensor)}, {"timestamp", ts}, {"bbox", bbox_to_json(e.bbox)}});
            json& sj = sensors[std::string(grasp::to_string(e.sensor))];
            if (sj.is_null()) sj = {{"count", 0}, {"first", ts}, {"last", ts}};
            sj["count"] = sj["count"].get<int>() + 1;
            sj["last"] = ts;
        }
        json body{{"scenes", std::move(scenes)}, {"sensors", sensors}, {"version", cat.version()},
                  {"land_mask", cat.has_land_mask()}};
        if (const auto ext = cat.extent()) body["bbox"] = bbox_to_json(*ext);
        else body["bbox"] = nullptr;
        return json_response(200, body);
    }

    Response create_layer(const Catalog& cat, const json& req) {
        const LayerSpec spec = parse_layer_spec(req);
        const auto layer = layer_for(cat, spec);
        json body = layer->info;
        body["layer_id"] = layer->id;
        return json_response(200, body);
    }

    Response layer_info(const Catalog& cat, const std::string& id) {
        const auto layer = find_layer(cat, id);
        if (!layer) return error_response(404, "UnknownLayer", "no layer '" + id + "'");
        json body = layer->info;
        body["layer_id"] = layer->id;
        body["spec"] = layer->spec.canonical;
        return json_response(200, body);
    }

    std::shared_ptr<const Layer> find_layer(const Catalog& cat, const std::string& id) {
        if (auto hit = cache_.get(id)) return hit;
        std::optional<LayerSpec> spec;
        {
            std::lock_guard lock(specs_mutex_);
            if (auto it = specs_.find(id); it != specs_.end()) spec = it->second;
        }
        if (!spec) return nullptr;
        // Evicted: recompute from the recorded spec.
        return layer_for(cat, *spec);
    }

    Response tile(const Catalog& cat, std::string_view rest, std::string_view if_none_match) {
        // rest = {layer_id}/{z}/{x}/{y}.png
        std::vector<std::string_view> parts;
        while (!rest.empty()) {
            const auto slash = rest.find('/');
            parts.push_back(rest.substr(0, slash));
            rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash + 1);
        }
        if (parts.size() != 4 || !parts[3].ends_with(".png"))
            return error_response(400, "InvalidTile", "expected /tiles/{layer_id}/{z}/{x}/{y}.png");
        parts[3].remove_suffix(4);
        long long z = -1, x = -1, y = -1;
        auto num = [](std::string_view s, long long& out) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            return ec == std::errc{} && p == s.data() + s.size();
        };
        if (!num(parts[1], z) || !num(parts[2], x) || !num(parts[3], y) || z < 0 || z > kMaxZoom || x < 0 || y < 0 ||
            x >= (1LL << z) || y >= (1LL << z))
            return error_response(400, "InvalidTile", "tile indices out of range");
        const TileKey key{static_cast<int>(z), static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)};

        const std::string id(parts[0]);
        const auto layer = find_layer(cat, id);
        if (!layer) return error_response(404, "UnknownLayer", "no layer '" + id + "'");

        const std::string etag =
            "\"" + Fnv1a().update(id).update(std::uint64_t(key.z)).update(std::uint64_t(key.x)).update(std::uint64_t(key.y)).update(cat.version()).hex() + "\"";
        if (!if_none_match.empty() && if_none_match == etag) return {304, "image/png", {}, etag};
        const auto pixels = render_tile(*layer, key);
        return {200, "image/png", encode_png_rgba(pixels, kTileSize, kTileSize), etag};
    }

    static Response timeseries(const Catalog& cat, const json& req) {
        if (!req.is_object() || !req.contains("polygon"))
            return error_response(422, "InvalidArgument", "missing field 'polygon'", "polygon");
        GeoPolygon poly;
        try {
            poly = polygon_from_json(req["polygon"]);
        } catch (const Error& e) {
            return error_response(422, e.name(), e.what(), "polygon");
        }
        Sensor sensor = Sensor::SAR;
        if (req.contains("sensor")) {
            if (!req["sensor"].is_string()) return error_response(422, "InvalidArgument", "'sensor' must be a string", "sensor");
            sensor = parse_sensor(req["sensor"].get<std::string>());
        }
        std::string band = sensor == Sensor::SAR ? "vv" : "nir";
        if (req.contains("band")) {
            if (!req["band"].is_string()) return error_response(422, "InvalidArgument", "'band' must be a string", "band");
            band = req["band"].get<std::string>();
        }
        std::optional<DateRange> range;
        if (req.contains("date_range") && !req["date_range"].is_null()) {
            const json& r = req["date_range"];
            if (!r.is_array() || r.size() != 2 || !r[0].is_string() || !r[1].is_string())
                return error_response(422, "InvalidArgument", "'date_range' must be [first, last]", "date_range");
            range = DateRange{parse_date(r[0].get<std::string>()), parse_date(r[1].get<std::string>())};
        }
        return json_response(200, to_json(zonal_timeseries(cat, poly, sensor, band, range)));
    }

    Response pumice(const Catalog& cat, const json& req) {
        json spec = req;
        if (spec.is_object()) spec["kind"] = "pumice";
        const auto layer = layer_for(cat, parse_layer_spec(spec));
        return json_response(200, {{"layer_id", layer->id},
                                   {"threshold", layer->info["threshold"]},
                                   {"scene_id", layer->info["scene_id"]},
                                   {"pumice_pixels", layer->info["pumice_pixels"]}});
    }

    std::filesystem::path root_;
    ServiceOptions options_;
    mutable std::shared_mutex state_mutex_;
    std::shared_ptr<const Catalog> catalog_;
    std::string load_error_;
    LayerCache cache_;
    std::mutex specs_mutex_;
    std::unordered_map<std::string, LayerSpec> specs_;
};

} // namespace grasp::service
