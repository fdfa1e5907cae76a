// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Loopback HTTP server for client tests.

#pragma once

#include <string>
#include <thread>

#include <httplib.h>

namespace euea::testing {

class MockServer {
 public:
  MockServer() = default;
  ~MockServer() { stop(); }
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  httplib::Server& server() { return server_; }

  /// Binds an ephemeral port and serves on a background thread.
  std::string start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace euea::testing
