#pragma once

#include <filesystem>
#include <string>

#include <httplib.h>

#include "grasp/service.hpp"

namespace grasp::service {

/// Routes every GET/POST through TileService::handle. Responses carry
/// permissive CORS headers so a viewer served from elsewhere can call in.
inline void bind_routes(httplib::Server& server, TileService& svc,
                        const std::filesystem::path& static_dir = {}) {
    if (!static_dir.empty()) server.set_mount_point("/viewer", static_dir.string());

    auto forward = [&svc](const httplib::Request& req, httplib::Response& res) {
        const Response r = svc.handle(req.method, req.path, req.body, req.get_header_value("If-None-Match"));
        res.status = r.status;
        if (!r.etag.empty()) {
            res.set_header("ETag", r.etag);
            res.set_header("Cache-Control", "public, max-age=3600");
        }
        if (r.status != 304) res.set_content(r.body, r.content_type);
    };
    server.Get(R"(/.*)", forward);
    server.Post(R"(/.*)", forward);
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type, If-None-Match"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
}

} // namespace grasp::service
