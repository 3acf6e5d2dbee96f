#include <gtest/gtest.h>

#include <thread>

#include "attend/http_api.hpp"
#include "httplib.h"
#include "json.hpp"
#include "support/test_support.hpp"

using namespace attend;
using namespace attend::session;
using namespace std::chrono_literals;
using json = nlohmann::json;
using testsupport::at;

namespace {

class Api : public ::testing::Test {
 protected:
  void SetUp() override {
    ServiceConfig cfg;
    cfg.roster_dir = dir / "roster";
    cfg.attendance_csv = dir / "attendance.csv";
    cfg.chair_ids = {"C1", "C2"};
    svc = std::make_unique<AttendanceService>(cfg, testsupport::demo_roster(), stats::published_means_table(),
                                              [this] { return now.load(); });
    api = std::make_unique<api::HttpApi>(*svc, api::HttpOptions{50ms});
    port = api->start("127.0.0.1", 0);
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(5, 0);
  }
  void TearDown() override { api->stop(); }

  json body(const httplib::Result& r) {
    EXPECT_TRUE(r) << httplib::to_string(r.error());
    return json::parse(r->body);
  }
  httplib::Result post(const std::string& path, const json& j) {
    return client->Post(path, j.dump(), "application/json");
  }

  testsupport::TempDir dir;
  std::atomic<Timestamp> now{at("2026-03-02T09:05:00")};
  std::unique_ptr<AttendanceService> svc;
  std::unique_ptr<api::HttpApi> api;
  std::unique_ptr<httplib::Client> client;
  int port = 0;
};

TEST(StatusMap, Codes) {
  EXPECT_EQ(api::http_status(Errc::not_found), 404);
  EXPECT_EQ(api::http_status(Errc::conflict), 409);
  EXPECT_EQ(api::http_status(Errc::ambiguity), 409);
  EXPECT_EQ(api::http_status(Errc::wrong_time), 422);
  EXPECT_EQ(api::http_status(Errc::malformed_uid), 400);
  EXPECT_EQ(api::http_status(Errc::io), 500);
}

TEST_F(Api, SessionRoutes) {
  EXPECT_EQ(client->Get("/sessions/current")->status, 404);
  auto r = post("/sessions", {{"course_id", "CS101"}});
  ASSERT_EQ(r->status, 201);
  EXPECT_EQ(body(r)["course_id"], "CS101");
  EXPECT_EQ(post("/sessions", {{"course_id", "CS101"}})->status, 409);
  EXPECT_EQ(body(client->Get("/sessions/current"))["course_id"], "CS101");
  EXPECT_EQ(client->Delete("/sessions/current")->status, 200);
  EXPECT_EQ(client->Delete("/sessions/current")->status, 404);

  now = at("2026-03-02T12:00:00");
  r = post("/sessions", {{"course_id", "CS101"}});
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(body(r)["error"], "wrong_time");
  EXPECT_EQ(post("/sessions", {{"course_id", "ZZ9"}})->status, 404);
  EXPECT_EQ(client->Post("/sessions", "{not json", "application/json")->status, 400);
  EXPECT_EQ(post("/sessions", {{"course", "CS101"}})->status, 400);
}

TEST_F(Api, StudentCrud) {
  const json s{{"uid", "77777777"}, {"name", "Ada"}, {"surname", "Kaya"},
               {"class", "MIS-2"},  {"age", 20},     {"gender", "F"}};
  ASSERT_EQ(post("/students", s)->status, 201);
  EXPECT_EQ(post("/students", s)->status, 409);
  auto bad = s;
  bad["uid"] = "7777";
  EXPECT_EQ(post("/students", bad)->status, 400);
  bad = s;
  bad["age"] = "twenty";
  EXPECT_EQ(post("/students", bad)->status, 400);

  auto r = client->Patch("/students/77777777", json{{"age", 21}, {"name", "Ada"}}.dump(), "application/json");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["modified"], json::array({"age"}));
  EXPECT_EQ(body(r)["student"]["age"], 21);
  EXPECT_EQ(client->Patch("/students/00000001", "{}", "application/json")->status, 404);

  const auto list = body(client->Get("/students"));
  ASSERT_EQ(list.size(), 6u);
  for (const auto& st : list) {
    if (st["uid"] == "04A1B2C3") EXPECT_EQ(st["courses"], json::array({"CS101", "CS102"}));
  }

  r = client->Delete("/students/04A1B2C3");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["removed_enrollments"], 2);
  EXPECT_EQ(client->Delete("/students/04A1B2C3")->status, 404);
  // Persisted through the service.
  EXPECT_EQ(roster::load_roster(dir / "roster"), svc->roster_snapshot());
}

TEST_F(Api, EnrollmentsAndCourses) {
  EXPECT_EQ(post("/enrollments", {{"course_id", "CS102"}, {"uid", "1B2C3D4E"}})->status, 201);
  EXPECT_EQ(post("/enrollments", {{"course_id", "CS102"}, {"uid", "1B2C3D4E"}})->status, 409);
  EXPECT_EQ(post("/enrollments", {{"course_id", "CS102"}, {"uid", "DEADBEEF"}})->status, 404);
  EXPECT_EQ(client->Delete("/enrollments?course_id=CS102&uid=1B2C3D4E")->status, 200);
  EXPECT_EQ(client->Delete("/enrollments?course_id=CS102&uid=1B2C3D4E")->status, 404);
  EXPECT_EQ(client->Delete("/enrollments")->status, 400);

  auto r = post("/courses", {{"course_id", "CS201"},
                             {"title", "Networks"},
                             {"weekday", "MON"},
                             {"start", "09:30"},
                             {"end", "10:30"}});
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(body(r)["error"], "ambiguity");
  r = post("/courses", {{"course_id", "CS201"}, {"title", "Networks"}, {"weekday", "TUE"}, {"start", "09:30"},
                        {"end", "10:30"}});
  EXPECT_EQ(r->status, 201);
  EXPECT_EQ(post("/courses", {{"course_id", "X"}, {"title", "t"}, {"weekday", "XYZ"}, {"start", "09:30"},
                              {"end", "10:30"}})
                ->status,
            400);

  const auto courses = body(client->Get("/courses"));
  ASSERT_EQ(courses.size(), 3u);
  for (const auto& c : courses) EXPECT_EQ(c["active_now"], c["course_id"] == "CS101") << c.dump();
}

TEST_F(Api, ReportsReferenceChairs) {
  EXPECT_EQ(client->Get("/reports/attendance")->status, 400);
  EXPECT_EQ(client->Get("/reports/attendance?course=NOPE")->status, 404);

  svc->start_session("CS101");
  svc->handle_frame(wire::WeightEvent{"C1", 70000, 1});
  now = at("2026-03-02T09:07:31");
  svc->handle_frame(wire::ScanEvent{CardUid::parse("04A1B2C3"), 2});
  const auto rep = body(client->Get("/reports/attendance?course=CS101"));
  ASSERT_EQ(rep["records"].size(), 1u);
  const json want{
      {"timestamp", "2026-03-02T09:07:31"}, {"course_id", "CS101"}, {"uid", "04A1B2C3"}, {"status", "ATTENDED"}};
  EXPECT_EQ(rep["records"][0], want);

  const auto chairs = body(client->Get("/chairs"));
  EXPECT_EQ(chairs["C1"]["state"], "Seated");
  EXPECT_EQ(chairs["C1"]["occupied"], true);
  EXPECT_EQ(chairs["C2"]["occupied"], false);

  EXPECT_TRUE(body(client->Get("/reference")).is_object());
}

std::vector<std::pair<std::uint64_t, json>> parse_sse(const std::string& text) {
  std::vector<std::pair<std::uint64_t, json>> out;
  std::size_t pos = 0;
  while (true) {
    const auto end = text.find("\n\n", pos);
    if (end == std::string::npos) break;
    const auto block = text.substr(pos, end - pos);
    pos = end + 2;
    if (block.rfind(":", 0) == 0) continue;
    std::uint64_t id = 0;
    json data;
    std::size_t lp = 0;
    while (lp < block.size()) {
      auto le = block.find('\n', lp);
      if (le == std::string::npos) le = block.size();
      const auto line = block.substr(lp, le - lp);
      if (line.rfind("id: ", 0) == 0) id = std::stoull(line.substr(4));
      if (line.rfind("data: ", 0) == 0) data = json::parse(line.substr(6));
      lp = le + 1;
    }
    out.emplace_back(id, data);
  }
  return out;
}

TEST_F(Api, EventBacklogAndResume) {
  svc->start_session("CS101");
  svc->handle_frame(wire::WeightEvent{"C1", 70000, 1});
  const auto all = parse_sse(client->Get("/events?follow=0")->body);
  ASSERT_GE(all.size(), 2u);
  EXPECT_EQ(all[0].first, 1u);
  EXPECT_EQ(all[0].second["kind"], "SessionChange");
  EXPECT_EQ(all[0].second["event_id"], 1);

  const auto tail = parse_sse(client->Get("/events?follow=0&since=1")->body);
  EXPECT_EQ(tail.size(), all.size() - 1);
  EXPECT_EQ(tail.front().first, 2u);
  const auto resumed = parse_sse(client->Get("/events?follow=0", {{"Last-Event-ID", "1"}})->body);
  EXPECT_EQ(resumed.size(), tail.size());
  EXPECT_EQ(client->Get("/events?follow=0&since=abc")->status, 400);
}

TEST_F(Api, LiveStreamDeliversNewEvents) {
  const auto start = svc->events().last_id();
  std::thread producer([&] {
    std::this_thread::sleep_for(150ms);
    svc->start_session("CS101");
  });
  std::string got;
  bool saw_keepalive = false;
  client->Get("/events", [&](const char* data, std::size_t n) {
    got.append(data, n);
    if (got.find(": keep-alive") != std::string::npos) saw_keepalive = true;
    return got.find("event: SessionChange") == std::string::npos;
  });
  producer.join();
  const auto ev = parse_sse(got);
  ASSERT_FALSE(ev.empty());
  EXPECT_GT(ev.back().first, start);
  EXPECT_EQ(ev.back().second["payload"]["course_id"], "CS101");
  EXPECT_TRUE(saw_keepalive);
}

TEST_F(Api, StopEndsOpenStreams) {
  std::atomic<bool> returned{false};
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    c.Get("/events", [](const char*, std::size_t) { return true; });
    returned = true;
  });
  std::this_thread::sleep_for(100ms);
  api->stop();
  reader.join();
  EXPECT_TRUE(returned);
}

}  // namespace
