#include "attend/verification.hpp"

#include <algorithm>
#include <array>

namespace attend::verify {

namespace {

struct LcdEntry {
  LcdCode code;
  std::string_view token;
  std::string_view text;
};

constexpr std::array<LcdEntry, 6> kLcdTable{{
    {LcdCode::SystemReady, "SYSTEM_READY", "SISTEM HAZIR"},
    {LcdCode::Welcome, "WELCOME", "HOS GELDINIZ"},
    {LcdCode::StudentNotFound, "STUDENT_NOT_FOUND", "OGRENCI YOK"},
    {LcdCode::WrongTime, "WRONG_TIME", "YANLIS SAAT"},
    {LcdCode::WrongCourse, "WRONG_COURSE", "YANLIS DERS"},
    {LcdCode::AttendanceConfirmed, "ATTENDANCE_CONFIRMED", "YOKLAMA ALINDI"},
}};

}  // namespace

std::string_view to_string(StageOne s) noexcept {
  switch (s) {
    case StageOne::Welcome: return "Welcome";
    case StageOne::NotFound: return "NotFound";
    case StageOne::WrongCourse: return "WrongCourse";
    case StageOne::WrongTime: return "WrongTime";
  }
  return "?";
}

std::string_view to_string(Presence p) noexcept {
  switch (p) {
    case Presence::Confirmed: return "Confirmed";
    case Presence::NotSeated: return "NotSeated";
    case Presence::OutOfBand: return "OutOfBand";
    case Presence::NoReferenceBand: return "NoReferenceBand";
  }
  return "?";
}

std::string_view to_string(LcdCode c) noexcept { return kLcdTable[static_cast<std::size_t>(c)].token; }

std::optional<LcdCode> parse_lcd_code(std::string_view token) noexcept {
  for (const auto& e : kLcdTable) {
    if (e.token == token) return e.code;
  }
  return std::nullopt;
}

std::string_view display_text(LcdCode c) noexcept { return kLcdTable[static_cast<std::size_t>(c)].text; }

nlohmann::json to_json(const ScanDecision& d) {
  nlohmann::json j{{"stage_one", to_string(d.stage_one.kind)},
                   {"lcd", to_string(d.lcd)},
                   {"record_created", d.record_created}};
  j["presence"] = d.presence ? nlohmann::json(to_string(*d.presence)) : nlohmann::json(nullptr);
  if (d.stage_one.student) {
    const auto& s = *d.stage_one.student;
    j["student"] = {{"uid", s.uid.str()}, {"name", s.name}, {"surname", s.surname}};
  }
  return j;
}

StageOneOutcome verify_stage_one(const ScanContext& ctx, const roster::Roster& roster) {
  const auto* student = roster.find_by_uid(ctx.uid);
  if (!student) return {StageOne::NotFound, std::nullopt};
  if (!ctx.active_course) return {StageOne::WrongTime, std::nullopt};
  const auto* course = roster.find_course(*ctx.active_course);
  if (!course || !roster.is_enrolled(course->course_id, ctx.uid)) {
    return {StageOne::WrongCourse, std::nullopt};
  }
  if (!course->contains(ctx.now)) return {StageOne::WrongTime, std::nullopt};
  return {StageOne::Welcome, *student};
}

std::optional<Band> reference_band(const roster::Student& student, const stats::ReferenceTable& table,
                                   const PresencePolicy& policy) {
  const auto* cell = table.find(student.age, student.gender);
  if (!cell) return std::nullopt;
  const bool degenerate = cell->std_kg <= 0.0 || cell->count < 2;
  const double half = degenerate ? policy.fallback_halfwidth_kg : policy.k_sigma * cell->std_kg;
  Band band{cell->mean_kg - half, cell->mean_kg + half};
  if (policy.require_seated) band.lo_kg = std::max(band.lo_kg, seat::kSeatedKg);
  return band;
}

Presence verify_presence(const seat::ChairState& chair, const std::optional<Band>& band,
                         const PresencePolicy& policy) {
  // Without require_seated a chair still settling in the transient band is
  // judged on its latest reading.
  std::optional<double> kg;
  if (const auto* seated = std::get_if<seat::Seated>(&chair)) {
    kg = seated->kg;
  } else if (const auto* t = std::get_if<seat::Transient>(&chair); t && !policy.require_seated) {
    kg = t->last_kg;
  }
  if (!kg) return Presence::NotSeated;
  if (!band) return Presence::NoReferenceBand;
  return (band->lo_kg <= *kg && *kg <= band->hi_kg) ? Presence::Confirmed : Presence::OutOfBand;
}

LcdCode lcd_for(StageOne stage_one, std::optional<Presence> presence) noexcept {
  switch (stage_one) {
    case StageOne::NotFound: return LcdCode::StudentNotFound;
    case StageOne::WrongCourse: return LcdCode::WrongCourse;
    case StageOne::WrongTime: return LcdCode::WrongTime;
    case StageOne::Welcome:
      return presence == Presence::Confirmed ? LcdCode::AttendanceConfirmed : LcdCode::Welcome;
  }
  return LcdCode::SystemReady;
}

ScanDecision decide(const ScanContext& ctx, const roster::Roster& roster,
                    const stats::ReferenceTable& table, const ChairReader& read_chair,
                    const PresencePolicy& policy) {
  ScanDecision d;
  d.stage_one = verify_stage_one(ctx, roster);
  if (d.stage_one.kind == StageOne::Welcome) {
    const auto band = reference_band(*d.stage_one.student, table, policy);
    d.presence = verify_presence(read_chair(), band, policy);
  }
  d.lcd = lcd_for(d.stage_one.kind, d.presence);
  d.record_created = d.stage_one.kind == StageOne::Welcome && d.presence == Presence::Confirmed;
  return d;
}

ScanDecision decide(const ScanContext& ctx, const roster::Roster& roster,
                    const stats::ReferenceTable& table, const seat::ChairState& chair,
                    const PresencePolicy& policy) {
  return decide(ctx, roster, table, [&] { return chair; }, policy);
}

}  // namespace attend::verify
