#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "attend/attendance_log.hpp"
#include "attend/event_stream.hpp"
#include "attend/reference_stats.hpp"
#include "attend/roster.hpp"
#include "attend/seat_model.hpp"
#include "attend/verification.hpp"
#include "attend/weight_pool.hpp"
#include "attend/wire_protocol.hpp"

namespace attend::session {

enum class SessionState { Open, Closed };

struct Session {
  std::string session_id;
  std::string course_id;
  Timestamp opened_at;
  std::optional<Timestamp> closed_at;
  SessionState state = SessionState::Open;
  pool::WeightPool pool;
  std::set<CardUid> seen_uids;

  nlohmann::json to_json() const;
};

struct ServiceConfig {
  std::filesystem::path roster_dir;  // roster CSVs; empty keeps the roster in memory only
  std::filesystem::path attendance_csv;
  verify::PresencePolicy policy;
  double pool_tolerance = 0.10;
  double pool_empty_threshold_kg = 20.0;
  std::vector<std::string> chair_ids;
  std::string reader_chair;  // chair the card reader is mounted on
  bool sync_each_append = true;
};

using WallClock = std::function<Timestamp()>;

/// What one scan did, for callers that want more than the event stream.
struct ScanOutcome {
  verify::ScanDecision decision;
  bool duplicate = false;
  bool session_open = false;
};

/// Owns the roster, the attendance log, the open session and the chair
/// snapshots. Every mutation, whether a device frame or an API call, goes
/// through one mutex in arrival order.
class AttendanceService {
 public:
  AttendanceService(ServiceConfig cfg, roster::Roster roster, stats::ReferenceTable table, WallClock clock);

  Session start_session(const std::string& course_id);
  Session start_session(const std::string& course_id, Timestamp now);
  Session close_session();
  Session close_session(Timestamp now);
  std::optional<Session> current_session() const;

  /// Processes one device frame and returns the frames to send back.
  std::vector<wire::Frame> handle_frame(const wire::Frame& frame);
  std::vector<wire::Frame> handle_frame(const wire::Frame& frame, Timestamp now);
  /// Outcome of the most recent ScanEvent.
  std::optional<ScanOutcome> last_scan() const;

  void add_student(roster::Student s);
  std::set<std::string> update_student(const CardUid& uid, const roster::StudentChanges& changes);
  std::size_t delete_student(const CardUid& uid);
  void add_course(roster::Course c);
  void enroll(const std::string& course_id, const CardUid& uid);
  void remove_from_course(const std::string& course_id, const CardUid& uid);
  roster::Roster roster_snapshot() const;

  /// Throws Error(not_found) for a course the roster does not know.
  std::vector<AttendanceRecord> report(const std::string& course_id) const;
  std::vector<AttendanceRecord> all_records() const;

  std::map<std::string, seat::ChairState> chair_snapshot() const;
  const stats::ReferenceTable& reference_table() const noexcept { return table_; }
  EventStream& events() noexcept { return events_; }
  const EventStream& events() const noexcept { return events_; }
  Timestamp now() const { return clock_(); }

 private:
  std::vector<wire::Frame> on_scan(const wire::ScanEvent& scan, Timestamp now);
  std::vector<wire::Frame> on_weight(const wire::WeightEvent& w, Timestamp now);
  wire::LcdCommand lcd(verify::LcdCode code, std::string arg = {});
  void persist_roster(const roster::Roster& r);
  void publish(std::string type, nlohmann::json payload);

  ServiceConfig cfg_;
  roster::Roster roster_;
  stats::ReferenceTable table_;
  WallClock clock_;
  AttendanceLog log_;
  EventStream events_;

  mutable std::mutex mu_;
  std::optional<Session> session_;
  std::size_t sessions_started_ = 0;
  std::map<std::string, seat::ChairState> chairs_;
  wire::SequenceTracker device_seq_;
  std::optional<ScanOutcome> last_scan_;
};

nlohmann::json student_json(const roster::Student& s);
nlohmann::json course_json(const roster::Course& c);
nlohmann::json record_json(const AttendanceRecord& r);

/// Student name folded to the LCD charset, at most 16 chars.
std::string lcd_name(const roster::Student& s);

/// Host-side view of a chair rebuilt from a reported weight.
seat::ChairState chair_state_from_grams(std::uint32_t grams);

}  // namespace attend::session
