#pragma once

#include <sstream>
#include <string>

#include <json.hpp>

#include "grasp/engine.hpp"

// JSON and CSV forms of the engine's inputs and outputs. Coordinates are
// always [lon, lat] pairs.

namespace grasp {

using nlohmann::json;

namespace detail {

inline std::vector<LonLat> points_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw Error(ErrorCode::InvalidArgument, "'" + field + "' must be an array of [lon, lat]", field);
    std::vector<LonLat> out;
    out.reserve(j.size());
    for (const auto& p : j) {
        if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number())
            throw Error(ErrorCode::InvalidArgument, "'" + field + "' entries must be [lon, lat]", field);
        out.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return out;
}

inline json points_to_json(const std::vector<LonLat>& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back({p.lon, p.lat});
    return a;
}

inline const json& require(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains(field))
        throw Error(ErrorCode::InvalidArgument, "missing field '" + field + "'", field);
    return j.at(field);
}

inline Date date_field(const json& j, const std::string& field) {
    const json& v = require(j, field);
    if (!v.is_string()) throw Error(ErrorCode::InvalidArgument, "'" + field + "' must be an ISO-8601 date", field);
    try {
        return parse_date(v.get<std::string>());
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidArgument, "'" + field + "': " + e.what(), field);
    }
}

} // namespace detail

inline CalibrationSet calibration_from_json(const json& j) {
    CalibrationSet c;
    c.constructed = detail::points_from_json(detail::require(j, "constructed"), "constructed");
    c.destructed = detail::points_from_json(detail::require(j, "destructed"), "destructed");
    if (j.contains("reference")) {
        const json& ref = j["reference"];
        c.reference_date1 = detail::date_field(ref, "date1");
        c.reference_date2 = detail::date_field(ref, "date2");
    }
    return c;
}

inline json to_json(const CalibrationSet& c) {
    json j{{"constructed", detail::points_to_json(c.constructed)}, {"destructed", detail::points_to_json(c.destructed)}};
    if (c.reference_date1 && c.reference_date2)
        j["reference"] = {{"date1", format_date(*c.reference_date1)}, {"date2", format_date(*c.reference_date2)}};
    return j;
}

inline PumiceCalibration pumice_calibration_from_json(const json& j) {
    return {detail::points_from_json(detail::require(j, "pumice"), "pumice"),
            detail::points_from_json(detail::require(j, "non_pumice"), "non_pumice")};
}

inline json to_json(const PumiceCalibration& c) {
    return {{"pumice", detail::points_to_json(c.pumice)}, {"non_pumice", detail::points_to_json(c.non_pumice)}};
}

/// Accepts a bare ring list, {"rings": ...}, a GeoJSON Polygon, or a
/// GeoJSON Feature wrapping one.
inline GeoPolygon polygon_from_json(const json& j) {
    const json* rings = &j;
    if (j.is_object()) {
        if (j.contains("geometry")) return polygon_from_json(j["geometry"]);
        if (j.contains("coordinates")) rings = &j["coordinates"];
        else if (j.contains("rings")) rings = &j["rings"];
        else throw Error(ErrorCode::InvalidArgument, "polygon needs 'coordinates' or 'rings'", "polygon");
    }
    if (!rings->is_array() || rings->empty())
        throw Error(ErrorCode::DegeneratePolygon, "polygon must have at least one ring", "polygon");
    // A bare ring: [[lon, lat], ...].
    if ((*rings)[0].is_array() && !(*rings)[0].empty() && (*rings)[0][0].is_number())
        return polygon_from_json(json{{"rings", json::array({*rings})}});
    GeoPolygon poly;
    for (const auto& ring : *rings) {
        auto pts = detail::points_from_json(ring, "polygon");
        // GeoJSON rings repeat the first vertex at the end.
        if (pts.size() > 1 && pts.front().lon == pts.back().lon && pts.front().lat == pts.back().lat) pts.pop_back();
        poly.rings.push_back(std::move(pts));
    }
    validate(poly);
    return poly;
}

inline json polygon_to_json(const GeoPolygon& poly) {
    json rings = json::array();
    for (const auto& r : poly.rings) rings.push_back(detail::points_to_json(r));
    return {{"type", "Polygon"}, {"coordinates", std::move(rings)}};
}

inline json to_json(const TimeSeries& series) {
    json samples = json::array();
    for (const auto& s : series) {
        json item{{"timestamp", format_timestamp(s.timestamp)}, {"valid_pixels", s.valid_pixels}};
        item["mean_db"] = s.mean ? json(*s.mean) : json(nullptr);
        samples.push_back(std::move(item));
    }
    return {{"samples", std::move(samples)}};
}

inline std::string format_mean(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

/// Fixed header "timestamp,mean_db,valid_pixels"; a missing mean is an empty field.
inline std::string timeseries_csv(const TimeSeries& series) {
    std::string out = "timestamp,mean_db,valid_pixels\n";
    for (const auto& s : series) {
        out += format_timestamp(s.timestamp);
        out += ',';
        if (s.mean) out += format_mean(*s.mean);
        out += ',';
        out += std::to_string(s.valid_pixels);
        out += '\n';
    }
    return out;
}

inline json load_json_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::InvalidArgument, "'" + path.string() + "' is not valid JSON", path.string());
    return j;
}

} // namespace grasp
