// Copyright 2026 The speakaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "speakaug/listen/http.h"

#include "httplib.h"
#include "speakaug/common/error.h"
#include "speakaug/common/fileio.h"

namespace speakaug::listen {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

json session_json(const SessionView& v) {
  return {{"session_id", v.session_id},
          {"listener_id", v.listener_id},
          {"position", v.position},
          {"total", v.total},
          {"complete", v.complete}};
}

int status_code(RatingStatus s) {
  switch (s) {
    case RatingStatus::kAccepted:
    case RatingStatus::kDuplicate: return 200;
    case RatingStatus::kInvalid: return 400;
    default: return 409;
  }
}

}  // namespace

struct HttpServer::Impl {
  ListenService& service;
  httplib::Server server;

  explicit Impl(ListenService& s) : service(s) {}

  template <typename F>
  auto guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      try {
        f(req, res);
      } catch (const NotFound& e) {
        send_error(res, 404, e.what());
      } catch (const Conflict& e) {
        send_error(res, 409, e.what());
      } catch (const InvalidArgument& e) {
        send_error(res, 400, e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, std::string("malformed request: ") + e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  }

  void routes() {
    server.set_payload_max_length(1 << 16);
    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = json::parse(req.body);
                  send_json(res, 200, session_json(service.open_session(body.at("listener_id").get<std::string>())));
                }));
    server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, 200, session_json(service.session(req.matches[1])));
               }));
    server.Get(R"(/sessions/([^/]+)/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto n = service.next(req.matches[1]);
                 json out = {{"done", n.done}, {"position", n.position}, {"total", n.total}};
                 if (!n.done) {
                   out["stimulus_id"] = n.stimulus_id;
                   out["audio_url"] = n.audio_url;
                   out["reference_url"] = n.reference_url;
                 }
                 send_json(res, 200, out);
               }));
    server.Post(R"(/sessions/([^/]+)/ratings)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json b = json::parse(req.body);
                  RatingSubmission r;
                  r.stimulus_id = b.at("stimulus_id").get<std::string>();
                  r.mos = b.at("mos").get<int>();
                  r.dmos = b.at("dmos").get<int>();
                  r.dialect_choice = b.at("dialect_choice").get<std::string>();
                  r.token = b.at("token").get<std::string>();
                  const auto out = service.record(req.matches[1], r);
                  json body = {{"status", rating_status_name(out.status)}};
                  if (out.ok()) body["seq"] = out.seq;
                  if (!out.message.empty()) body["message"] = out.message;
                  if (!out.expected.empty()) body["expected"] = out.expected;
                  send_json(res, status_code(out.status), body);
                }));
    server.Get("/references", guarded([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, 200, {{"references", service.references()}});
               }));
    server.Get("/export", guarded([this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(service.export_csv(), "text/csv");
               }));
    server.Get(R"(/audio/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto path = service.audio_path(req.matches[1]);
                 if (!path) throw NotFound("no audio for \"" + std::string(req.matches[1]) + "\"");
                 res.set_content(read_file(*path), "audio/wav");
               }));
  }
};

HttpServer::HttpServer(ListenService& service) : impl_(std::make_unique<Impl>(service)) { impl_->routes(); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw std::runtime_error("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace speakaug::listen
