// Binds a Service to a cpp-httplib server.
#pragma once

#include <functional>
#include <optional>
#include <string>

#include "httplib.h"

#include "plsanim/service.hpp"

namespace plsanim {

using RequestLog = std::function<void(const std::string& method, const std::string& path, int status)>;

inline void bind_routes(httplib::Server& server, Service& service, const std::optional<std::string>& static_dir = std::nullopt,
                        RequestLog log = nullptr) {
  auto forward = [&service, log](const httplib::Request& req, httplib::Response& res) {
    Response r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
    if (log) log(req.method, req.path, r.status);
  };
  const char* pattern = R"(/api/.*)";
  server.Get(pattern, forward);
  server.Post(pattern, forward);
  server.Delete(pattern, forward);
  if (static_dir) server.set_mount_point("/", *static_dir);
}

}  // namespace plsanim
