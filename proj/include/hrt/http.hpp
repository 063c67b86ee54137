#pragma once

#include <memory>
#include <string>

#include "hrt/service.hpp"

namespace httplib {
class Server;
}

namespace hrt {

/// HTTP front end for a CoordinationService. Writes one JSON line per request to stderr.
class HttpServer {
 public:
  explicit HttpServer(CoordinationService& service);
  ~HttpServer();

  /// Binds host:port (port 0 picks a free one) and returns the bound port, or -1 on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  bool serve();
  void stop();

 private:
  CoordinationService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace hrt
