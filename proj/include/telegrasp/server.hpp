// Copyright 2026 The Telegrasp Authors
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

#pragma once

#include <memory>
#include <thread>
#include <vector>

#include "telegrasp/service.hpp"

namespace telegrasp {

/// HTTP routes and the WebSocket endpoint /session on one listening port.
class Server {
 public:
  explicit Server(ServiceCore& core);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds, starts the worker threads and returns the bound port.
  unsigned short start();
  void stop();
  /// Blocks until SIGINT or SIGTERM, then stops.
  void run_until_signal();

  unsigned short port() const { return port_; }

 private:
  struct Impl;
  ServiceCore& core_;
  std::unique_ptr<Impl> impl_;
  std::vector<std::thread> threads_;
  unsigned short port_ = 0;
};

}  // namespace telegrasp
