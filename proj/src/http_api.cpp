#include "attend/http_api.hpp"

#include <charconv>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"

namespace attend::api {

using nlohmann::json;

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::not_found: return 404;
    case Errc::conflict:
    case Errc::ambiguity:
    case Errc::state: return 409;
    case Errc::wrong_time: return 422;
    case Errc::schema:
    case Errc::row:
    case Errc::domain:
    case Errc::malformed_uid:
    case Errc::parse:
    case Errc::validation:
    case Errc::reference:
    case Errc::calibration: return 400;
    case Errc::protocol:
    case Errc::framing:
    case Errc::encode:
    case Errc::io: break;
  }
  return 500;
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  reply(res, status, {{"error", code}, {"message", message}});
}

// Wraps a handler so domain errors and malformed bodies map to JSON errors.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, "validation", e.what());
    }
  };
}

json body_of(const httplib::Request& req) {
  json j = json::parse(req.body);
  if (!j.is_object()) throw Error(Errc::validation, "request body must be a JSON object");
  return j;
}

std::string required_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw Error(Errc::validation, fmt::format("'{}' must be a string", key));
  return it->get<std::string>();
}

int required_int(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) {
    throw Error(Errc::validation, fmt::format("'{}' must be an integer", key));
  }
  return it->get<int>();
}

Gender required_gender(const json& j, const char* key) {
  const auto text = required_string(j, key);
  auto g = parse_gender(text);
  if (!g) throw Error(Errc::validation, fmt::format("unknown gender '{}'", text));
  return *g;
}

// Enrollment pairs come in the body, or as query parameters for DELETE
// clients that cannot send one.
std::pair<std::string, CardUid> enrollment_of(const httplib::Request& req) {
  if (req.body.empty()) {
    if (!req.has_param("course_id") || !req.has_param("uid")) {
      throw Error(Errc::validation, "course_id and uid are required");
    }
    return {req.get_param_value("course_id"), CardUid::parse(req.get_param_value("uid"))};
  }
  const auto j = body_of(req);
  return {required_string(j, "course_id"), CardUid::parse(required_string(j, "uid"))};
}

std::uint64_t parse_event_id(const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end) throw Error(Errc::validation, fmt::format("bad event id '{}'", text));
  return v;
}

std::string sse_frame(const session::StreamEvent& e) {
  return fmt::format("id: {}\nevent: {}\ndata: {}\n\n", e.id, e.type, e.to_json().dump());
}

}  // namespace

HttpApi::HttpApi(session::AttendanceService& service, HttpOptions options)
    : service_(service), options_(options), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::start(const std::string& host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error(Errc::io, fmt::format("cannot bind {}:{}", host, port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpApi::stop() {
  stopping_ = true;
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void HttpApi::install_routes() {
  auto& svc = service_;
  auto& srv = *server_;
  srv.Post("/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const auto j = body_of(req);
    reply(res, 201, svc.start_session(required_string(j, "course_id")).to_json());
  }));
  srv.Get("/sessions/current", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    auto s = svc.current_session();
    if (!s || s->state != session::SessionState::Open) throw Error(Errc::not_found, "no open session");
    reply(res, 200, s->to_json());
  }));
  srv.Delete("/sessions/current", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, svc.close_session().to_json());
  }));

  srv.Get("/students", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    const auto r = svc.roster_snapshot();
    json out = json::array();
    for (const auto& s : r.students()) {
      auto j = session::student_json(s);
      j["courses"] = r.student_courses(s.uid);
      out.push_back(std::move(j));
    }
    reply(res, 200, out);
  }));
  srv.Post("/students", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const auto j = body_of(req);
    roster::Student s{CardUid::parse(required_string(j, "uid")),
                      required_string(j, "name"),
                      required_string(j, "surname"),
                      required_string(j, "class"),
                      required_int(j, "age"),
                      required_gender(j, "gender")};
    svc.add_student(s);
    reply(res, 201, session::student_json(s));
  }));
  srv.Patch("/students/:uid", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const auto uid = CardUid::parse(req.path_params.at("uid"));
    const auto j = body_of(req);
    roster::StudentChanges c;
    if (j.contains("name")) c.name = required_string(j, "name");
    if (j.contains("surname")) c.surname = required_string(j, "surname");
    if (j.contains("class")) c.class_label = required_string(j, "class");
    if (j.contains("age")) c.age = required_int(j, "age");
    if (j.contains("gender")) c.gender = required_gender(j, "gender");
    const auto modified = svc.update_student(uid, c);
    const auto r = svc.roster_snapshot();
    reply(res, 200, {{"student", session::student_json(*r.find_by_uid(uid))}, {"modified", modified}});
  }));
  srv.Delete("/students/:uid", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const auto uid = CardUid::parse(req.path_params.at("uid"));
    const auto dropped = svc.delete_student(uid);
    reply(res, 200, {{"uid", uid.str()}, {"removed_enrollments", dropped}});
  }));

  srv.Post("/enrollments", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const auto [course, uid] = enrollment_of(req);
    svc.enroll(course, uid);
    reply(res, 201, {{"course_id", course}, {"uid", uid.str()}});
  }));
  srv.Delete("/enrollments", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const auto [course, uid] = enrollment_of(req);
    svc.remove_from_course(course, uid);
    reply(res, 200, {{"course_id", course}, {"uid", uid.str()}});
  }));

  srv.Get("/courses", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    const auto r = svc.roster_snapshot();
    const auto active = r.course_active_at(svc.now());
    json out = json::array();
    for (const auto& c : r.courses()) {
      auto j = session::course_json(c);
      json students = json::array();
      for (const auto& uid : r.course_students(c.course_id)) students.push_back(uid.str());
      j["students"] = std::move(students);
      j["active_now"] = active && active->course_id == c.course_id;
      out.push_back(std::move(j));
    }
    reply(res, 200, out);
  }));
  srv.Post("/courses", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const auto j = body_of(req);
    const auto day_text = required_string(j, "weekday");
    const auto day = roster::parse_weekday(day_text);
    if (!day) throw Error(Errc::validation, fmt::format("unknown weekday '{}'", day_text));
    roster::Course c{required_string(j, "course_id"), required_string(j, "title"), *day,
                     roster::TimeOfDay::parse(required_string(j, "start")),
                     roster::TimeOfDay::parse(required_string(j, "end"))};
    svc.add_course(c);
    reply(res, 201, session::course_json(c));
  }));

  srv.Get("/reports/attendance", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("course")) throw Error(Errc::validation, "query parameter 'course' is required");
    const auto course = req.get_param_value("course");
    json rows = json::array();
    for (const auto& r : svc.report(course)) rows.push_back(session::record_json(r));
    reply(res, 200, {{"course_id", course}, {"records", std::move(rows)}});
  }));

  srv.Get("/reference", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, svc.reference_table().to_json());
  }));

  srv.Get("/chairs", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    json out = json::object();
    for (const auto& [id, state] : svc.chair_snapshot()) {
      out[id] = {{"state", seat::state_name(state)}, {"occupied", std::holds_alternative<seat::Seated>(state)}};
    }
    reply(res, 200, out);
  }));

  srv.Get("/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t after = 0;
    if (req.has_param("since")) after = parse_event_id(req.get_param_value("since"));
    else if (req.has_header("Last-Event-ID")) after = parse_event_id(req.get_header_value("Last-Event-ID"));
    const bool follow = req.get_param_value("follow") != "0";

    if (!follow) {
      std::string body;
      for (const auto& e : service_.events().since(after)) body += sse_frame(e);
      res.set_content(body, "text/event-stream");
      return;
    }
    res.set_header("Cache-Control", "no-cache");
    auto cursor = std::make_shared<std::uint64_t>(after);
    res.set_chunked_content_provider(
        "text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) {
          if (stopping_) {
            sink.done();
            return true;
          }
          const auto batch = service_.events().wait_since(*cursor, options_.sse_heartbeat);
          std::string out;
          for (const auto& e : batch) {
            out += sse_frame(e);
            *cursor = e.id;
          }
          if (out.empty()) out = ": keep-alive\n\n";
          return sink.write(out.data(), out.size());
        });
  }));
}

}  // namespace attend::api
