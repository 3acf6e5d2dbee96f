#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "attend/types.hpp"

namespace attend::seat {

inline constexpr double kTransientLowKg = 10.0;
inline constexpr double kSeatedKg = 40.0;
inline constexpr int kMaxRechecks = 3;
inline constexpr SteadyMillis kRecheckInterval{1000};

using RawCounts = std::int64_t;

struct LoadCellConfig {
  double tare_counts = 0.0;
  double scale_counts_per_kg = 1.0;
  double deadband_kg = 0.5;
};

/// Negative results (drift below tare) clamp to 0.
double adc_to_kg(RawCounts raw, const LoadCellConfig& cfg);

/// Two-point calibration. Throws Error(calibration) for a zero span or a
/// non-positive reference weight.
LoadCellConfig calibrate(double reference_kg, RawCounts raw_at_reference, RawCounts raw_at_zero,
                         double deadband_kg = 0.5);

/// Deadband around the last stable value: small moves read as no move.
double filter_reading(double kg, double last_stable, const LoadCellConfig& cfg);

enum class Band { Empty, Transient, Seated };

/// <10 kg Empty, [10, 40) Transient, >= 40 Seated.
Band band_of(double kg) noexcept;

struct Empty {
  friend bool operator==(const Empty&, const Empty&) = default;
};

struct Transient {
  SteadyMillis entered_at{0};
  int rechecks_done = 0;
  double last_kg = 0.0;
  /// Set when the chair was Seated right before entering the band, so that
  /// a later drop to Empty still reads as a stand-up.
  bool from_seated = false;
  friend bool operator==(const Transient&, const Transient&) = default;
};

struct Seated {
  double kg = 0.0;
  SteadyMillis since{0};
  friend bool operator==(const Seated&, const Seated&) = default;
};

using ChairState = std::variant<Empty, Transient, Seated>;

Band band_of(const ChairState& state) noexcept;
std::string_view state_name(const ChairState& state) noexcept;

enum class SeatEventKind { SatDown, StoodUp, Unstable };

std::string_view to_string(SeatEventKind kind) noexcept;

struct Transition {
  SeatEventKind kind;
  double kg = 0.0;  // reading that triggered it
};

/// One state-machine step. `now` must not go backwards between calls.
///
/// A Transient chair performs one recheck per full second spent in the band
/// (at +1 s, +2 s, +3 s after entry); the third recheck still in-band emits
/// Unstable once and the counter stays at 3.
std::pair<ChairState, std::optional<Transition>> step(const ChairState& state, double kg,
                                                      SteadyMillis now);

struct SeatEvent {
  SeatEventKind kind;
  std::string chair_id;
  SteadyMillis at{0};
  double kg = 0.0;
};

/// One physical chair: the calibration, the deadband memory and the state
/// machine. Single-threaded.
class Chair {
 public:
  Chair(std::string id, LoadCellConfig cfg) : id_(std::move(id)), cfg_(cfg) {}

  /// Converts, filters and steps one raw sample.
  std::optional<SeatEvent> feed_raw(RawCounts raw, SteadyMillis now);
  /// Filters and steps a reading already in kilograms.
  std::optional<SeatEvent> feed_kg(double kg, SteadyMillis now);

  /// Re-zero at the given raw reading.
  void tare(RawCounts raw_at_zero) noexcept { cfg_.tare_counts = static_cast<double>(raw_at_zero); }

  const std::string& id() const noexcept { return id_; }
  const ChairState& state() const noexcept { return state_; }
  const LoadCellConfig& config() const noexcept { return cfg_; }
  double last_stable_kg() const noexcept { return last_stable_; }

 private:
  std::string id_;
  LoadCellConfig cfg_;
  ChairState state_ = Empty{};
  double last_stable_ = 0.0;
};

}  // namespace attend::seat
