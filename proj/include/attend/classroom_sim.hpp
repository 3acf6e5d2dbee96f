#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "attend/seat_model.hpp"
#include "attend/types.hpp"
#include "attend/verification.hpp"
#include "attend/wire_protocol.hpp"

namespace attend::sim {

inline constexpr SteadyMillis kDefaultTick{100};
inline constexpr int kCellsPerChair = 4;

/// Lock-step clock. Steady time starts at 0 and only moves on `advance`;
/// the wall clock is steady time plus an offset that scenarios may reset.
class VirtualClock {
 public:
  explicit VirtualClock(Timestamp wall_at_start = default_epoch(), SteadyMillis tick = kDefaultTick);

  void advance() noexcept { steady_ += tick_; }
  /// Wall clock reads `wall` at steady time `at`.
  void set_wall(Timestamp wall, SteadyMillis at) noexcept;

  SteadyMillis steady() const noexcept { return steady_; }
  SteadyMillis tick() const noexcept { return tick_; }
  Timestamp wall() const noexcept { return wall_base_ + (steady_ - wall_set_at_); }

  static Timestamp default_epoch();

 private:
  SteadyMillis steady_{0};
  SteadyMillis tick_;
  Timestamp wall_base_;
  SteadyMillis wall_set_at_{0};
};

struct ChairSpec {
  std::string id;
  seat::RawCounts tare_counts = 0;
  double scale_counts_per_kg = 1.0;
  double noise_kg = 0.0;  // std dev of the summed chair signal
};

struct CardSpec {
  CardUid uid;
  std::optional<CardUid> student;  // whose card this is, when it differs from who scans it
};

struct Sit {
  std::string chair;
  double kg;
};
struct Stand {
  std::string chair;
};
struct ScanCard {
  CardUid uid;
  int failure_count = 0;
};
struct SetTime {
  Timestamp wall;
};

struct Action {
  SteadyMillis at{0};
  std::variant<Sit, Stand, ScanCard, SetTime> what;
  std::size_t line = 0;
};

struct Scenario {
  std::uint64_t seed = 0;
  std::vector<ChairSpec> chairs;
  std::vector<CardSpec> cards;
  std::vector<Action> timeline;

  const ChairSpec* find_chair(std::string_view id) const;
};

/// Line-oriented scenario text:
///
///   SEED <u64>
///   CHAIR <id> TARE <counts> SCALE <counts/kg> NOISE <kg>
///   CARD <uid> [STUDENT <uid>]
///   AT <t ms> SIT <chair> <kg>
///   AT <t ms> STAND <chair>
///   AT <t ms> SCAN <uid> [FAIL <n>]
///   AT <t ms> CLOCK <YYYY-MM-DDTHH:MM[:SS]>
///
/// `#` starts a comment. Throws Error(parse) with the line number for bad
/// syntax or an unsorted timeline, Error(reference) for undeclared ids.
Scenario load_scenario(std::string_view text);
Scenario load_scenario(std::istream& in);

struct DeviceConfig {
  int retry_limit = 3;  // card read attempts per scan, first read included
  double deadband_kg = 0.5;
};

/// The classroom device: load-cell chairs, the card reader with retries and
/// the LCD, run one loop iteration per clock tick.
class DeviceSim {
 public:
  explicit DeviceSim(Scenario scenario, DeviceConfig cfg = {});

  /// Advances one tick and runs one loop iteration. Returns device->host
  /// frames in emission order.
  std::vector<wire::Frame> tick();
  /// Ticks until steady time reaches `t`. A no-op if already there.
  std::vector<wire::Frame> run_to(SteadyMillis t);

  /// Applies a host->device frame (LCD text, tare). Acks are accepted and ignored.
  void deliver(const wire::Frame& frame);

  const VirtualClock& clock() const noexcept { return clock_; }
  const Scenario& scenario() const noexcept { return scenario_; }
  const std::vector<seat::Chair>& chairs() const noexcept { return chairs_; }
  /// Reading the chair's cells would report right now, before noise.
  double true_kg(std::string_view chair_id) const;
  const seat::Chair* chair(std::string_view id) const;
  verify::LcdCode lcd_code() const noexcept { return lcd_code_; }
  const std::string& lcd_arg() const noexcept { return lcd_arg_; }
  /// Scan attempts that gave up after the retry limit.
  std::size_t lapsed_scans() const noexcept { return lapsed_scans_; }
  /// Count of buffered items (pending scans). Stays flat in steady state.
  std::size_t buffered_items() const noexcept { return scans_.size(); }
  bool timeline_done() const noexcept { return next_action_ >= scenario_.timeline.size(); }

 private:
  struct PendingScan {
    CardUid uid;
    int failures_left;
    int attempts = 0;
  };
  struct ChairSignal {
    double true_kg = 0.0;
    double noise_kg = 0.0;
    seat::RawCounts last_raw = 0;
    std::mt19937_64 rng;
  };

  void apply(const Action& action);
  seat::RawCounts sample(std::size_t index);
  std::uint32_t next_seq() noexcept { return ++seq_; }

  Scenario scenario_;
  DeviceConfig cfg_;
  VirtualClock clock_;
  std::vector<seat::Chair> chairs_;
  std::vector<ChairSignal> signals_;
  std::deque<PendingScan> scans_;
  std::size_t next_action_ = 0;
  std::uint32_t seq_ = 0;
  verify::LcdCode lcd_code_ = verify::LcdCode::SystemReady;
  std::string lcd_arg_;
  std::size_t lapsed_scans_ = 0;
};

}  // namespace attend::sim
