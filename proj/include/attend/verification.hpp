#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "attend/reference_stats.hpp"
#include "attend/roster.hpp"
#include "attend/seat_model.hpp"
#include "attend/types.hpp"

namespace attend::verify {

struct ScanContext {
  CardUid uid;
  Timestamp now;
  std::string chair_id;
  std::optional<std::string> active_course;
};

enum class StageOne { Welcome, NotFound, WrongCourse, WrongTime };

struct StageOneOutcome {
  StageOne kind = StageOne::NotFound;
  std::optional<roster::Student> student;  // set only for Welcome
};

struct PresencePolicy {
  double k_sigma = 2.0;
  double fallback_halfwidth_kg = 15.0;
  bool require_seated = true;
};

struct Band {
  double lo_kg;
  double hi_kg;
};

enum class Presence { Confirmed, NotSeated, OutOfBand, NoReferenceBand };

enum class LcdCode { SystemReady, Welcome, StudentNotFound, WrongTime, WrongCourse, AttendanceConfirmed };

std::string_view to_string(StageOne s) noexcept;
std::string_view to_string(Presence p) noexcept;
/// Wire token, e.g. ATTENDANCE_CONFIRMED.
std::string_view to_string(LcdCode c) noexcept;
std::optional<LcdCode> parse_lcd_code(std::string_view token) noexcept;
/// Text for a 16x2 panel, at most 16 ASCII chars.
std::string_view display_text(LcdCode c) noexcept;

/// Outcome of one scan. Deliberately carries no weight: the reading is used
/// for the band comparison inside `decide` and then dropped.
struct ScanDecision {
  StageOneOutcome stage_one;
  std::optional<Presence> presence;  // unset when stage one failed
  LcdCode lcd = LcdCode::SystemReady;
  bool record_created = false;

  /// Welcome but not confirmed: the instructor should look at this scan.
  bool needs_attention() const noexcept {
    return stage_one.kind == StageOne::Welcome && presence && *presence != Presence::Confirmed;
  }
};

nlohmann::json to_json(const ScanDecision& d);

/// Checks in order: registered, enrolled in the active course, inside the
/// course's slot. No active course reads as WrongTime.
StageOneOutcome verify_stage_one(const ScanContext& ctx, const roster::Roster& roster);

/// mean +/- k_sigma * std, or mean +/- fallback when std is 0 or count < 2.
/// Lower edge clamps to the seated threshold when the policy requires it.
std::optional<Band> reference_band(const roster::Student& student, const stats::ReferenceTable& table,
                                   const PresencePolicy& policy);

Presence verify_presence(const seat::ChairState& chair, const std::optional<Band>& band,
                         const PresencePolicy& policy);

LcdCode lcd_for(StageOne stage_one, std::optional<Presence> presence) noexcept;

using ChairReader = std::function<seat::ChairState()>;

/// Both stages. `read_chair` is only invoked once stage one passed.
ScanDecision decide(const ScanContext& ctx, const roster::Roster& roster,
                    const stats::ReferenceTable& table, const ChairReader& read_chair,
                    const PresencePolicy& policy);

ScanDecision decide(const ScanContext& ctx, const roster::Roster& roster,
                    const stats::ReferenceTable& table, const seat::ChairState& chair,
                    const PresencePolicy& policy);

}  // namespace attend::verify
