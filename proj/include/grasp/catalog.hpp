#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "grasp/container.hpp"
#include "grasp/hash.hpp"
#include "grasp/raster.hpp"
#include "grasp/time.hpp"

namespace grasp {

namespace fs = std::filesystem;

enum class Sensor { SAR, OPTICAL };

constexpr std::string_view to_string(Sensor s) noexcept { return s == Sensor::SAR ? "SAR" : "OPTICAL"; }

inline Sensor parse_sensor(std::string_view text) {
    std::string up(text);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (up == "SAR") return Sensor::SAR;
    if (up == "OPTICAL") return Sensor::OPTICAL;
    throw Error(ErrorCode::InvalidArgument, "unknown sensor '" + std::string(text) + "' (expected SAR or OPTICAL)",
                "sensor");
}

inline constexpr std::array<std::string_view, 1> kSarBands{"vv"};
inline constexpr std::array<std::string_view, 5> kOpticalBands{"red", "green", "blue", "nir", "cloud"};
inline constexpr std::string_view kLandBand = "land";

/// Throws MissingBand naming the first absent role.
inline void check_band_roles(const Raster& raster, Sensor sensor) {
    if (sensor == Sensor::SAR) {
        for (auto role : kSarBands)
            if (!raster.has_band(role))
                throw Error(ErrorCode::MissingBand, "SAR scene lacks band '" + std::string(role) + "'", std::string(role));
        if (raster.has_band("cloud"))
            throw Error(ErrorCode::InvalidArgument, "SAR scenes must not carry a cloud band", "cloud");
        return;
    }
    for (auto role : kOpticalBands)
        if (!raster.has_band(role))
            throw Error(ErrorCode::MissingBand, "optical scene lacks band '" + std::string(role) + "'", std::string(role));
}

struct SceneEntry {
    std::string id;
    Sensor sensor = Sensor::SAR;
    Timestamp timestamp{};
    BoundingBox bbox{};
    std::string path; // relative to the catalog root
};

struct Scene {
    SceneEntry entry;
    std::shared_ptr<const Raster> raster;

    const Raster& data() const noexcept { return *raster; }
};

using SceneRef = std::shared_ptr<const Scene>;

struct Manifest {
    std::vector<SceneEntry> scenes;
    std::optional<std::string> land_mask;

    void sort() {
        std::sort(scenes.begin(), scenes.end(), [](const SceneEntry& a, const SceneEntry& b) {
            return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
        });
    }
};

inline nlohmann::json bbox_to_json(const BoundingBox& b) { return nlohmann::json::array({b.west, b.south, b.east, b.north}); }

inline BoundingBox bbox_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 4)
        throw Error(ErrorCode::InvalidArgument, "bbox must be [west, south, east, north]", "bbox");
    BoundingBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!b.is_valid()) throw Error(ErrorCode::InvalidArgument, "bbox needs west < east and south < north", "bbox");
    return b;
}

inline nlohmann::json manifest_to_json(const Manifest& m) {
    nlohmann::json scenes = nlohmann::json::array();
    for (const auto& s : m.scenes)
        scenes.push_back({{"id", s.id},
                          {"sensor", to_string(s.sensor)},
                          {"timestamp", format_timestamp(s.timestamp)},
                          {"bbox", bbox_to_json(s.bbox)},
                          {"path", s.path}});
    nlohmann::json stat = nlohmann::json::object();
    if (m.land_mask) stat["land_mask"] = *m.land_mask;
    return {{"format", 1}, {"scenes", std::move(scenes)}, {"static", std::move(stat)}};
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    Manifest m;
    try {
        for (const auto& s : j.at("scenes")) {
            SceneEntry e;
            e.id = s.at("id").get<std::string>();
            e.sensor = parse_sensor(s.at("sensor").get<std::string>());
            e.timestamp = parse_timestamp(s.at("timestamp").get<std::string>());
            e.bbox = bbox_from_json(s.at("bbox"));
            e.path = s.at("path").get<std::string>();
            m.scenes.push_back(std::move(e));
        }
        if (j.contains("static") && j["static"].contains("land_mask"))
            m.land_mask = j["static"]["land_mask"].get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::FormatViolation, std::string("malformed manifest: ") + ex.what());
    }
    for (std::size_t i = 0; i < m.scenes.size(); ++i)
        for (std::size_t k = i + 1; k < m.scenes.size(); ++k)
            if (m.scenes[i].id == m.scenes[k].id)
                throw Error(ErrorCode::DuplicateId, "manifest lists scene id '" + m.scenes[i].id + "' twice", m.scenes[i].id);
    m.sort();
    return m;
}

inline fs::path manifest_path(const fs::path& root) { return root / "manifest.json"; }

inline Manifest load_manifest(const fs::path& root) {
    const auto bytes = read_file_bytes(manifest_path(root));
    nlohmann::json j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::FormatViolation, "manifest.json is not valid JSON");
    return manifest_from_json(j);
}

/// Writes to a temporary file and renames over manifest.json so readers see
/// either the old or the new document, never a partial one.
inline void save_manifest(const fs::path& root, Manifest m) {
    m.sort();
    const std::string text = manifest_to_json(m).dump(2) + "\n";
    const fs::path tmp = root / "manifest.json.tmp";
    write_file_bytes(tmp, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    std::error_code ec;
    fs::rename(tmp, manifest_path(root), ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot replace manifest: " + ec.message());
}

inline void create_catalog(const fs::path& root) {
    std::error_code ec;
    fs::create_directories(root / "scenes", ec);
    fs::create_directories(root / "static", ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create catalog directories under '" + root.string() + "'");
    if (!fs::exists(manifest_path(root))) save_manifest(root, {});
}

inline std::string scene_id_for(Sensor sensor, Timestamp ts, const fs::path& source) {
    std::string stamp;
    for (char c : format_timestamp(ts))
        if (c != '-' && c != ':') stamp.push_back(c);
    std::string stem;
    for (char c : source.stem().string())
        stem.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ? c : '_');
    std::string sensor_name(to_string(sensor));
    std::transform(sensor_name.begin(), sensor_name.end(), sensor_name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return sensor_name + "-" + stamp + "-" + stem;
}

/// Stores an encoded scene under `id`. Re-storing identical bytes under an
/// existing id is a no-op; different bytes under an existing id is an error.
inline std::string store_scene(const fs::path& root, Manifest& manifest, std::span<const std::uint8_t> bytes,
                               Sensor sensor, Timestamp ts, const std::string& id) {
    const Raster raster = decode_container(bytes);
    validate(raster.grid());
    check_band_roles(raster, sensor);

    const std::string rel = "scenes/" + id + ".grsp";
    for (const auto& e : manifest.scenes) {
        if (e.id != id) continue;
        if (e.sensor == sensor && e.timestamp == ts && fs::exists(root / e.path) &&
            std::ranges::equal(read_file_bytes(root / e.path), bytes))
            return id;
        throw Error(ErrorCode::DuplicateId, "scene id '" + id + "' already holds different data", id);
    }
    write_file_bytes(root / rel, bytes);
    manifest.scenes.push_back({id, sensor, ts, raster.grid().bounds(), rel});
    manifest.sort();
    return id;
}

/// Copies a container file into the catalog and registers it. Creates the
/// catalog layout when `root` has none yet.
inline std::string ingest(const fs::path& root, const fs::path& file, Sensor sensor, Timestamp ts) {
    create_catalog(root);
    Manifest manifest = load_manifest(root);
    const auto bytes = read_file_bytes(file);
    const std::string id = store_scene(root, manifest, bytes, sensor, ts, scene_id_for(sensor, ts, file));
    save_manifest(root, std::move(manifest));
    return id;
}

inline void set_land_mask(const fs::path& root, const Raster& land) {
    land.band(kLandBand);
    create_catalog(root);
    Manifest manifest = load_manifest(root);
    write_container(land, root / "static" / "land_mask.grsp");
    manifest.land_mask = "static/land_mask.grsp";
    save_manifest(root, std::move(manifest));
}

/// Immutable, fully loaded snapshot of a catalog directory. Copies share the
/// underlying scene data; a new snapshot is obtained by opening again.
class Catalog {
public:
    Catalog() = default;

    static Catalog open(const fs::path& root) {
        if (!fs::is_directory(root))
            throw Error(ErrorCode::IoFailure, "catalog root '" + root.string() + "' is not a directory", root.string());
        Catalog c;
        c.root_ = root;
        const auto manifest_bytes = read_file_bytes(manifest_path(root));
        c.version_ = Fnv1a().update(manifest_bytes).hex();
        nlohmann::json j = nlohmann::json::parse(manifest_bytes.begin(), manifest_bytes.end(), nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::FormatViolation, "manifest.json is not valid JSON");
        c.manifest_ = manifest_from_json(j);
        for (const auto& e : c.manifest_.scenes) {
            auto raster = std::make_shared<Raster>(read_container(root / e.path));
            check_band_roles(*raster, e.sensor);
            c.scenes_.push_back(std::make_shared<const Scene>(Scene{e, std::move(raster)}));
        }
        if (c.manifest_.land_mask) {
            auto land = std::make_shared<Raster>(read_container(root / *c.manifest_.land_mask));
            land->band(kLandBand);
            c.land_ = std::move(land);
        }
        return c;
    }

    const fs::path& root() const noexcept { return root_; }
    const Manifest& manifest() const noexcept { return manifest_; }
    const std::vector<SceneRef>& scenes() const noexcept { return scenes_; }
    std::size_t size() const noexcept { return scenes_.size(); }
    const std::string& version() const noexcept { return version_; }

    SceneRef find(std::string_view id) const {
        for (const auto& s : scenes_)
            if (s->entry.id == id) return s;
        return nullptr;
    }

    /// Scenes of `sensor` whose calendar day lies in `window` and whose
    /// extent intersects `bbox`, ascending by timestamp.
    std::vector<SceneRef> query(Sensor sensor, const DateWindow& window, const BoundingBox& bbox) const {
        std::vector<SceneRef> out;
        for (const auto& s : scenes_)
            if (s->entry.sensor == sensor && window.contains(s->entry.timestamp) && s->entry.bbox.intersects(bbox))
                out.push_back(s);
        return out;
    }

    /// Union of all scene extents (and the land mask), if any.
    std::optional<BoundingBox> extent() const {
        std::optional<BoundingBox> b;
        for (const auto& s : scenes_) {
            const BoundingBox& e = s->entry.bbox;
            if (!b) b = e;
            else b = BoundingBox{std::min(b->west, e.west), std::min(b->south, e.south), std::max(b->east, e.east),
                                 std::max(b->north, e.north)};
        }
        return b;
    }

    bool has_land_mask() const noexcept { return land_ != nullptr; }

    /// Land mask sampled (nearest) onto `grid`; pixels with no land
    /// information count as water.
    Mask land_on(const GridSpec& grid) const {
        Mask out(grid.width, grid.height, 0);
        if (!land_) return out;
        const Raster sampled = sample_nearest(*land_, grid);
        const FloatPlane& land = sampled.band(kLandBand);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.data[i] = sampled.valid().data[i] != 0 && land.data[i] >= 0.5f ? 1 : 0;
        return out;
    }

private:
    fs::path root_;
    Manifest manifest_;
    std::vector<SceneRef> scenes_;
    std::shared_ptr<const Raster> land_;
    std::string version_;
};

} // namespace grasp
