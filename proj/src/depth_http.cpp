/* Copyright 2026 The SVF Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Eigen must precede httplib: <resolv.h> defines _res.
#include "svf/depth_tool.hpp"
#include "svf/error.hpp"

#include <httplib.h>

#include <thread>

namespace svf {

struct DepthHttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

DepthHttpServer::DepthHttpServer(DepthService& service) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post("/rpc", [&service](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json response;
    try {
      response = service.handle(nlohmann::json::parse(req.body));
    } catch (const nlohmann::json::parse_error& e) {
      res.status = 400;
      response = {{"error", std::string("malformed request: ") + e.what()},
                  {"code", error_code_name(ErrorCode::kSchemaViolation)}};
    }
    res.set_content(response.dump(), "application/json");
  });
}

DepthHttpServer::~DepthHttpServer() { stop(); }

int DepthHttpServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::kInvalidArgument, "cannot listen on " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void DepthHttpServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::kInvalidArgument, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void DepthHttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace svf
