#include "attend/session_service.hpp"

#include <cctype>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "attend/error.hpp"

namespace attend::session {

nlohmann::json student_json(const roster::Student& s) {
  return {{"uid", s.uid.str()},
          {"name", s.name},
          {"surname", s.surname},
          {"class", s.class_label},
          {"age", s.age},
          {"gender", std::string(1, gender_letter(s.gender))},
          {"in_reference_range", s.in_reference_range()}};
}

nlohmann::json course_json(const roster::Course& c) {
  return {{"course_id", c.course_id},
          {"title", c.title},
          {"weekday", roster::to_string(c.weekday)},
          {"start", c.start.str()},
          {"end", c.end.str()}};
}

nlohmann::json record_json(const AttendanceRecord& r) {
  return {{"timestamp", format_iso(r.timestamp)},
          {"course_id", r.course_id},
          {"uid", r.uid.str()},
          {"status", r.status}};
}

nlohmann::json Session::to_json() const {
  nlohmann::json j{{"session_id", session_id},
                   {"course_id", course_id},
                   {"opened_at", format_iso(opened_at)},
                   {"state", state == SessionState::Open ? "Open" : "Closed"},
                   {"checked_in", seen_uids.size()},
                   {"expected_total_kg", pool.expected_total_kg()}};
  j["closed_at"] = closed_at ? nlohmann::json(format_iso(*closed_at)) : nlohmann::json(nullptr);
  return j;
}

std::string lcd_name(const roster::Student& s) {
  std::string out;
  for (char c : s.name + " " + s.surname) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) && u < 0x80) {
      out.push_back(static_cast<char>(std::toupper(u)));
    } else if ((c == ' ' || c == '-' || c == '.') && !out.empty() && out.back() != ' ') {
      out.push_back(c == '-' || c == '.' ? c : ' ');
    }
    if (out.size() == wire::kMaxLcdArg) break;
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

seat::ChairState chair_state_from_grams(std::uint32_t grams) {
  const double kg = grams / 1000.0;
  switch (seat::band_of(kg)) {
    case seat::Band::Seated: return seat::Seated{kg, SteadyMillis{0}};
    case seat::Band::Transient: return seat::Transient{SteadyMillis{0}, seat::kMaxRechecks, kg, false};
    case seat::Band::Empty: break;
  }
  return seat::Empty{};
}

AttendanceService::AttendanceService(ServiceConfig cfg, roster::Roster roster, stats::ReferenceTable table,
                                     WallClock clock)
    : cfg_(std::move(cfg)),
      roster_(std::move(roster)),
      table_(std::move(table)),
      clock_(std::move(clock)),
      log_(cfg_.attendance_csv, cfg_.sync_each_append) {
  for (const auto& id : cfg_.chair_ids) chairs_.emplace(id, seat::Empty{});
  if (cfg_.reader_chair.empty() && !cfg_.chair_ids.empty()) cfg_.reader_chair = cfg_.chair_ids.front();
  if (log_.discarded_tail() > 0) {
    publish("Warning", {{"message", "attendance log had a truncated final line; it was discarded"}});
  }
}

void AttendanceService::publish(std::string type, nlohmann::json payload) {
  events_.publish(std::move(type), std::move(payload));
}

wire::LcdCommand AttendanceService::lcd(verify::LcdCode code, std::string arg) {
  wire::LcdCommand cmd{code, std::move(arg)};
  publish("LcdMirror", {{"code", verify::to_string(code)},
                        {"text", verify::display_text(code)},
                        {"arg", cmd.arg}});
  return cmd;
}

Session AttendanceService::start_session(const std::string& course_id) { return start_session(course_id, clock_()); }

Session AttendanceService::start_session(const std::string& course_id, Timestamp now) {
  std::lock_guard lock(mu_);
  if (session_ && session_->state == SessionState::Open) {
    throw Error(Errc::conflict, fmt::format("session {} is already open", session_->session_id));
  }
  if (!roster_.find_course(course_id)) {
    throw Error(Errc::not_found, fmt::format("course {} not found", course_id));
  }
  const auto active = roster_.course_active_at(now);
  if (!active || active->course_id != course_id) {
    throw Error(Errc::wrong_time, fmt::format("course {} is not in its time slot at {}", course_id,
                                              format_iso(now)));
  }
  session_ = Session{fmt::format("S{:04}", ++sessions_started_),
                     course_id,
                     now,
                     std::nullopt,
                     SessionState::Open,
                     pool::WeightPool(cfg_.pool_tolerance, cfg_.pool_empty_threshold_kg),
                     {}};
  publish("SessionChange", session_->to_json());
  return *session_;
}

Session AttendanceService::close_session() { return close_session(clock_()); }

Session AttendanceService::close_session(Timestamp now) {
  std::lock_guard lock(mu_);
  if (!session_ || session_->state != SessionState::Open) {
    throw Error(Errc::not_found, "no open session");
  }
  session_->state = SessionState::Closed;
  session_->closed_at = now;
  publish("SessionChange", session_->to_json());
  return *session_;
}

std::optional<Session> AttendanceService::current_session() const {
  std::lock_guard lock(mu_);
  return session_;
}

std::optional<ScanOutcome> AttendanceService::last_scan() const {
  std::lock_guard lock(mu_);
  return last_scan_;
}

std::vector<wire::Frame> AttendanceService::handle_frame(const wire::Frame& frame) {
  return handle_frame(frame, clock_());
}

std::vector<wire::Frame> AttendanceService::handle_frame(const wire::Frame& frame, Timestamp now) {
  std::lock_guard lock(mu_);
  const auto seq = wire::seq_of(frame);
  if (std::holds_alternative<wire::ScanEvent>(frame) || std::holds_alternative<wire::WeightEvent>(frame)) {
    // A repeated sequence number is a retransmission: ack it again, do not
    // process it twice.
    if (!device_seq_.accept(*seq)) return {wire::Ack{*seq}};
  }
  if (const auto* scan = std::get_if<wire::ScanEvent>(&frame)) return on_scan(*scan, now);
  if (const auto* weight = std::get_if<wire::WeightEvent>(&frame)) return on_weight(*weight, now);
  if (std::holds_alternative<wire::Ack>(frame) || std::holds_alternative<wire::Nack>(frame)) return {};
  publish("Warning", {{"message", "host-bound command frame received from device"}});
  return {};
}

std::vector<wire::Frame> AttendanceService::on_scan(const wire::ScanEvent& scan, Timestamp now) {
  std::vector<wire::Frame> replies{wire::Ack{scan.seq}};
  const bool open = session_ && session_->state == SessionState::Open;
  if (!open) {
    publish("SessionChange", {{"state", session_ ? "Closed" : "None"},
                              {"message", "scan received with no open session"},
                              {"uid", scan.uid.str()}});
  }

  verify::ScanContext ctx{scan.uid, now, cfg_.reader_chair,
                          open ? std::optional<std::string>(session_->course_id) : std::nullopt};
  ScanOutcome outcome{{}, false, open};

  auto read_chair = [&]() -> seat::ChairState {
    auto it = chairs_.find(cfg_.reader_chair);
    return it == chairs_.end() ? seat::ChairState{seat::Empty{}} : it->second;
  };

  if (open && session_->seen_uids.contains(scan.uid)) {
    // Already checked in this session: confirm again, touch nothing.
    auto stage = verify::verify_stage_one(ctx, roster_);
    if (stage.kind == verify::StageOne::Welcome) {
      outcome.duplicate = true;
      outcome.decision.stage_one = std::move(stage);
      outcome.decision.lcd = verify::LcdCode::AttendanceConfirmed;
    } else {
      outcome.decision = verify::decide(ctx, roster_, table_, read_chair, cfg_.policy);
    }
  } else {
    outcome.decision = verify::decide(ctx, roster_, table_, read_chair, cfg_.policy);
  }

  const auto& d = outcome.decision;
  nlohmann::json ev = verify::to_json(d);
  ev["uid"] = scan.uid.str();
  ev["at"] = format_iso(now);
  ev["duplicate"] = outcome.duplicate;
  ev["needs_attention"] = d.needs_attention();
  if (open) ev["course_id"] = session_->course_id;

  if (d.record_created) {
    AttendanceRecord rec{now, session_->course_id, scan.uid, std::string(kAttendedStatus)};
    log_.append(rec);
    session_->seen_uids.insert(scan.uid);
    session_->pool.add_member(*d.stage_one.student, table_);
    ev["token"] = wire::to_string(wire::EventToken::KATILDI);
  } else if (d.stage_one.kind == verify::StageOne::WrongTime) {
    ev["token"] = wire::to_string(wire::EventToken::YANLIS_SAAT);
  }
  publish("ScanDecision", std::move(ev));

  std::string arg = d.stage_one.student ? lcd_name(*d.stage_one.student) : std::string{};
  replies.emplace_back(lcd(d.lcd, std::move(arg)));
  last_scan_ = std::move(outcome);
  return replies;
}

std::vector<wire::Frame> AttendanceService::on_weight(const wire::WeightEvent& w, Timestamp now) {
  std::vector<wire::Frame> replies{wire::Ack{w.seq}};
  auto it = chairs_.find(w.chair_id);
  if (it == chairs_.end()) {
    spdlog::warn("weight frame for unknown chair '{}'", w.chair_id);
    publish("Warning", {{"message", "weight frame for unknown chair"}, {"chair", w.chair_id}});
    return replies;
  }
  it->second = chair_state_from_grams(w.grams);
  publish("SeatTransition", {{"chair", w.chair_id}, {"state", seat::state_name(it->second)}, {"at", format_iso(now)}});

  if (session_ && session_->state == SessionState::Open) {
    std::vector<seat::ChairState> states;
    states.reserve(chairs_.size());
    for (const auto& [id, s] : chairs_) states.push_back(s);
    if (auto report = session_->pool.compare(pool::class_total_kg(states), now)) {
      nlohmann::json j = pool::to_json(*report);
      j["session_id"] = session_->session_id;
      publish("Anomaly", std::move(j));
    }
  }
  return replies;
}

void AttendanceService::persist_roster(const roster::Roster& r) {
  if (!cfg_.roster_dir.empty()) roster::save_roster(r, cfg_.roster_dir);
}

void AttendanceService::add_student(roster::Student s) {
  std::lock_guard lock(mu_);
  auto next = roster_;
  next.add_student(s);
  persist_roster(next);
  std::swap(roster_, next);
  auto j = student_json(s);
  j["action"] = "student_added";
  publish("RosterChange", std::move(j));
}

std::set<std::string> AttendanceService::update_student(const CardUid& uid,
                                                        const roster::StudentChanges& changes) {
  std::lock_guard lock(mu_);
  auto next = roster_;
  auto modified = next.update_student(uid, changes);
  if (modified.empty()) return modified;
  persist_roster(next);
  std::swap(roster_, next);
  publish("RosterChange", {{"action", "student_updated"},
                           {"token", wire::to_string(wire::EventToken::OGRENCI_BILGILERI_GUNCELLENDI)},
                           {"uid", uid.str()},
                           {"modified_fields", modified}});
  return modified;
}

std::size_t AttendanceService::delete_student(const CardUid& uid) {
  std::lock_guard lock(mu_);
  auto next = roster_;
  const auto dropped = next.delete_student(uid);
  persist_roster(next);
  std::swap(roster_, next);
  if (session_ && session_->pool.contains(uid)) session_->pool.remove_member(uid);
  publish("RosterChange", {{"action", "student_deleted"}, {"uid", uid.str()}, {"removed_enrollments", dropped}});
  return dropped;
}

void AttendanceService::add_course(roster::Course c) {
  std::lock_guard lock(mu_);
  auto next = roster_;
  next.add_course(c);
  persist_roster(next);
  std::swap(roster_, next);
  publish("RosterChange", {{"action", "course_added"}, {"course_id", c.course_id}});
}

void AttendanceService::enroll(const std::string& course_id, const CardUid& uid) {
  std::lock_guard lock(mu_);
  auto next = roster_;
  next.enroll(course_id, uid);
  persist_roster(next);
  std::swap(roster_, next);
  publish("RosterChange", {{"action", "enrolled"},
                           {"token", wire::to_string(wire::EventToken::DERS_KAYIT)},
                           {"course_id", course_id},
                           {"uid", uid.str()}});
}

void AttendanceService::remove_from_course(const std::string& course_id, const CardUid& uid) {
  std::lock_guard lock(mu_);
  auto next = roster_;
  next.remove_from_course(course_id, uid);
  persist_roster(next);
  std::swap(roster_, next);
  publish("RosterChange", {{"action", "removed_from_course"},
                           {"token", wire::to_string(wire::EventToken::DERS_SILINDI)},
                           {"course_id", course_id},
                           {"uid", uid.str()}});
}

roster::Roster AttendanceService::roster_snapshot() const {
  std::lock_guard lock(mu_);
  return roster_;
}

std::vector<AttendanceRecord> AttendanceService::report(const std::string& course_id) const {
  std::lock_guard lock(mu_);
  if (!roster_.find_course(course_id)) {
    throw Error(Errc::not_found, fmt::format("course {} not found", course_id));
  }
  return log_.for_course(course_id);
}

std::vector<AttendanceRecord> AttendanceService::all_records() const {
  std::lock_guard lock(mu_);
  return log_.records();
}

std::map<std::string, seat::ChairState> AttendanceService::chair_snapshot() const {
  std::lock_guard lock(mu_);
  return chairs_;
}

}  // namespace attend::session
