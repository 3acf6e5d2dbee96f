#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <thread>

#include "attend/error.hpp"
#include "attend/session_service.hpp"

namespace httplib {
class Server;
}

namespace attend::api {

int http_status(Errc code) noexcept;

struct HttpOptions {
  // How long an idle /events connection waits before sending a keep-alive comment.
  std::chrono::milliseconds sse_heartbeat{1000};
};

/// JSON routes over an AttendanceService plus the /events push stream.
///
///   POST /sessions {course_id}      DELETE /sessions/current   GET /sessions/current
///   GET|POST /students              PATCH|DELETE /students/{uid}
///   POST|DELETE /enrollments {course_id, uid}
///   GET|POST /courses               GET /reports/attendance?course=ID
///   GET /reference                  GET /chairs
///   GET /events[?since=N][&follow=0]   (also honours Last-Event-ID)
class HttpApi {
 public:
  explicit HttpApi(session::AttendanceService& service, HttpOptions options = {});
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port; throws Error(io) when binding fails.
  int start(const std::string& host, int port);
  void stop();
  int port() const noexcept { return port_; }

  httplib::Server& server() noexcept { return *server_; }

 private:
  void install_routes();

  session::AttendanceService& service_;
  HttpOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
};

}  // namespace attend::api
