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

#ifndef SPEAKAUG_LISTEN_HTTP_H_
#define SPEAKAUG_LISTEN_HTTP_H_

#include <memory>
#include <string>

#include "speakaug/listen/service.h"

namespace speakaug::listen {

// JSON-over-HTTP front end for a ListenService:
//   POST /sessions                 {"listener_id"}
//   GET  /sessions/{id}
//   GET  /sessions/{id}/next
//   POST /sessions/{id}/ratings    {"stimulus_id","mos","dmos","dialect_choice","token"}
//   GET  /references
//   GET  /export                   ratings CSV
//   GET  /audio/{id}               WAV
class HttpServer {
 public:
  explicit HttpServer(ListenService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Returns the bound port; port 0 picks a free one.
  int bind(const std::string& host, int port);
  void serve();  // blocks until stop()
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace speakaug::listen

#endif  // SPEAKAUG_LISTEN_HTTP_H_
