// grasp: batch front end for the change engine and the tile service.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "grasp/catalog.hpp"
#include "grasp/container.hpp"
#include "grasp/engine.hpp"
#include "grasp/http.hpp"
#include "grasp/io.hpp"
#include "grasp/service.hpp"
#include "grasp/synth.hpp"

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

using namespace grasp;

BoundingBox parse_bbox(const std::string& text) {
    double v[4];
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf%c", &v[0], &v[1], &v[2], &v[3], &tail) != 4)
        throw CLI::ValidationError("--bbox", "expected west,south,east,north");
    const BoundingBox b{v[0], v[1], v[2], v[3]};
    if (!b.is_valid()) throw CLI::ValidationError("--bbox", "needs west < east and south < north");
    return b;
}

BoundingBox bbox_or_extent(const Catalog& cat, const std::string& text) {
    if (!text.empty()) return parse_bbox(text);
    const auto ext = cat.extent();
    if (!ext) throw Error(ErrorCode::NoScenesInWindow, "catalog holds no scenes");
    return *ext;
}

Raster mask_raster(const GridSpec& grid, const Mask& mask, const std::string& band) {
    Raster r(grid);
    FloatPlane& p = r.add_band(band);
    for (std::size_t i = 0; i < p.size(); ++i) p.data[i] = mask.data[i] ? 1.0f : 0.0f;
    return r;
}

void write_text(const std::string& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GRASP change-detection toolkit: synthetic catalogs, composites, change and pumice layers, "
                 "zonal time series, and the tile service"};
    app.require_subcommand(1);

    std::string config_path, out, catalog_dir, file, sensor_name = "SAR", date, date1, date2, calib, prefix,
                polygon_path, band, from, to, bbox_text, static_dir, host = "0.0.0.0";
    int window_days = -1, port = 8080;
    std::size_t cache_layers = 64;

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic catalog with ground truth");
    synth_cmd->add_option("--config", config_path, "synthetic scene config (JSON)")->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("--out", out, "output catalog directory")->required();

    auto* ingest_cmd = app.add_subcommand("ingest", "register a GRSP container in a catalog");
    ingest_cmd->add_option("--catalog", catalog_dir, "catalog directory")->required();
    ingest_cmd->add_option("file", file, "GRSP container")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("--sensor", sensor_name, "SAR or OPTICAL")->required();
    ingest_cmd->add_option("--date", date, "acquisition timestamp (ISO-8601 UTC)")->required();

    auto* composite_cmd = app.add_subcommand("composite", "temporal median composite around a date");
    composite_cmd->add_option("--catalog", catalog_dir, "catalog directory")->required()->check(CLI::ExistingDirectory);
    composite_cmd->add_option("--sensor", sensor_name, "SAR or OPTICAL")->required();
    composite_cmd->add_option("--date", date, "center date")->required();
    composite_cmd->add_option("--window-days", window_days, "days before and after (default 14 optical, 12 SAR)");
    composite_cmd->add_option("--bbox", bbox_text, "west,south,east,north (default: catalog extent)");
    composite_cmd->add_option("--out", out, "output GRSP file")->required();

    auto* change_cmd = app.add_subcommand("change", "SAR blue/red change masks between two dates");
    change_cmd->add_option("--catalog", catalog_dir, "catalog directory")->required()->check(CLI::ExistingDirectory);
    change_cmd->add_option("--date1", date1, "earlier date")->required();
    change_cmd->add_option("--date2", date2, "later date")->required();
    change_cmd->add_option("--calib", calib, "calibration JSON")->required()->check(CLI::ExistingFile);
    change_cmd->add_option("--window-days", window_days, "SAR composite half-window in days (default 12)");
    change_cmd->add_option("--bbox", bbox_text, "west,south,east,north (default: catalog extent)");
    change_cmd->add_option("--out-prefix", prefix, "writes PREFIX.blue.grsp, PREFIX.red.grsp, PREFIX.json")->required();

    auto* pumice_cmd = app.add_subcommand("pumice", "floating pumice mask for one date");
    pumice_cmd->add_option("--catalog", catalog_dir, "catalog directory")->required()->check(CLI::ExistingDirectory);
    pumice_cmd->add_option("--date", date, "date")->required();
    pumice_cmd->add_option("--calib", calib, "pumice calibration JSON")->required()->check(CLI::ExistingFile);
    pumice_cmd->add_option("--window-days", window_days, "nearest-scene search radius in days (default 2)");
    pumice_cmd->add_option("--bbox", bbox_text, "west,south,east,north (default: catalog extent)");
    pumice_cmd->add_option("--out", out, "output GRSP file")->required();

    auto* ts_cmd = app.add_subcommand("timeseries", "per-scene mean over a polygon, as CSV");
    ts_cmd->add_option("--catalog", catalog_dir, "catalog directory")->required()->check(CLI::ExistingDirectory);
    ts_cmd->add_option("--polygon", polygon_path, "polygon JSON")->required()->check(CLI::ExistingFile);
    ts_cmd->add_option("--sensor", sensor_name, "SAR or OPTICAL (default SAR)");
    ts_cmd->add_option("--band", band, "band name (default vv)");
    ts_cmd->add_option("--from", from, "first date (inclusive)");
    ts_cmd->add_option("--to", to, "last date (inclusive)");
    ts_cmd->add_option("--out", out, "output CSV")->required();

    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP tile and analysis service");
    serve_cmd->add_option("--catalog", catalog_dir, "catalog directory (default: $GRASP_CATALOG)");
    serve_cmd->add_option("--port", port, "listen port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--host", host, "listen address");
    serve_cmd->add_option("--cache-layers", cache_layers, "layer cache capacity")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--static", static_dir, "directory served under /viewer")->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "ERROR Usage: " << e.what() << "\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return kExitUsage;
    }

    try {
        if (*synth_cmd) {
            const auto cfg = synth::config_from_json(load_json_file(config_path));
            const auto truth = synth::generate(cfg, out);
            std::cout << "wrote " << truth.scenes.size() << " scenes and ground truth to " << out << "\n";
        } else if (*ingest_cmd) {
            std::cout << ingest(catalog_dir, file, parse_sensor(sensor_name), parse_timestamp(date)) << "\n";
        } else if (*composite_cmd) {
            const Catalog cat = Catalog::open(catalog_dir);
            const Sensor sensor = parse_sensor(sensor_name);
            const int days = window_days >= 0 ? window_days : sensor == Sensor::SAR ? kSarWindowDays : kOpticalWindowDays;
            write_container(temporal_composite(cat, sensor, parse_date(date), days, bbox_or_extent(cat, bbox_text)), out);
        } else if (*change_cmd) {
            const Catalog cat = Catalog::open(catalog_dir);
            const ChangeLayer layer =
                sar_change(cat, parse_date(date1), parse_date(date2), calibration_from_json(load_json_file(calib)),
                           bbox_or_extent(cat, bbox_text), window_days >= 0 ? window_days : kSarWindowDays);
            write_container(mask_raster(layer.grid, layer.blue_mask, "blue"), prefix + ".blue.grsp");
            write_container(mask_raster(layer.grid, layer.red_mask, "red"), prefix + ".red.grsp");
            const nlohmann::json summary{{"threshold_blue", layer.thresholds.blue},
                                         {"threshold_red", layer.thresholds.red},
                                         {"blue_pixels", count_set(layer.blue_mask)},
                                         {"red_pixels", count_set(layer.red_mask)}};
            write_text(prefix + ".json", summary.dump(2) + "\n");
            std::cout << summary.dump() << "\n";
        } else if (*pumice_cmd) {
            const Catalog cat = Catalog::open(catalog_dir);
            const PumiceLayer p = detect_pumice(cat, parse_date(date), pumice_calibration_from_json(load_json_file(calib)),
                                                bbox_or_extent(cat, bbox_text),
                                                window_days >= 0 ? window_days : kPumiceSearchDays);
            write_container(mask_raster(p.grid, p.mask, "pumice"), out);
            std::cout << nlohmann::json{{"threshold", p.threshold}, {"scene_id", p.scene_id},
                                        {"pumice_pixels", count_set(p.mask)}}.dump()
                      << "\n";
        } else if (*ts_cmd) {
            const Catalog cat = Catalog::open(catalog_dir);
            const Sensor sensor = parse_sensor(sensor_name);
            std::optional<DateRange> range;
            if (!from.empty() || !to.empty())
                range = DateRange{from.empty() ? Date::min() : parse_date(from), to.empty() ? Date::max() : parse_date(to)};
            const auto series = zonal_timeseries(cat, polygon_from_json(load_json_file(polygon_path)), sensor,
                                                 band.empty() ? (sensor == Sensor::SAR ? "vv" : "nir") : band, range);
            write_text(out, timeseries_csv(series));
        } else if (*serve_cmd) {
            if (catalog_dir.empty()) {
                if (const char* env = std::getenv("GRASP_CATALOG")) catalog_dir = env;
                else {
                    std::cerr << "ERROR Usage: --catalog is required when GRASP_CATALOG is unset\n" << serve_cmd->help();
                    return kExitUsage;
                }
            }
            service::TileService svc(catalog_dir, {cache_layers});
            httplib::Server server;
            service::bind_routes(server, svc, static_dir);
            std::cerr << "serving " << catalog_dir << " on http://" << host << ":" << port << "\n";
            if (!server.listen(host, port)) {
                std::cerr << "ERROR IoFailure: cannot listen on " << host << ":" << port << "\n";
                return kExitDomain;
            }
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "ERROR Usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "ERROR " << e.name() << ": " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "ERROR InternalError: " << e.what() << "\n";
        return kExitDomain;
    }
    return 0;
}
