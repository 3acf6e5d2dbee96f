#include "attend/seat_model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "attend/error.hpp"

namespace attend::seat {

double adc_to_kg(RawCounts raw, const LoadCellConfig& cfg) {
  const double kg = (static_cast<double>(raw) - cfg.tare_counts) / cfg.scale_counts_per_kg;
  return std::max(0.0, kg);
}

LoadCellConfig calibrate(double reference_kg, RawCounts raw_at_reference, RawCounts raw_at_zero,
                         double deadband_kg) {
  if (!(reference_kg > 0.0)) {
    throw Error(Errc::calibration, fmt::format("reference weight must be positive, got {}", reference_kg));
  }
  if (raw_at_reference == raw_at_zero) {
    throw Error(Errc::calibration, "zero calibration span");
  }
  if (deadband_kg < 0.0) throw Error(Errc::calibration, "deadband must be non-negative");
  return LoadCellConfig{
      static_cast<double>(raw_at_zero),
      static_cast<double>(raw_at_reference - raw_at_zero) / reference_kg,
      deadband_kg,
  };
}

double filter_reading(double kg, double last_stable, const LoadCellConfig& cfg) {
  return std::abs(kg - last_stable) <= cfg.deadband_kg ? last_stable : kg;
}

Band band_of(double kg) noexcept {
  if (kg >= kSeatedKg) return Band::Seated;
  if (kg >= kTransientLowKg) return Band::Transient;
  return Band::Empty;
}

Band band_of(const ChairState& state) noexcept {
  return static_cast<Band>(state.index());
}

std::string_view state_name(const ChairState& state) noexcept {
  switch (band_of(state)) {
    case Band::Empty: return "Empty";
    case Band::Transient: return "Transient";
    case Band::Seated: return "Seated";
  }
  return "?";
}

std::string_view to_string(SeatEventKind kind) noexcept {
  switch (kind) {
    case SeatEventKind::SatDown: return "SatDown";
    case SeatEventKind::StoodUp: return "StoodUp";
    case SeatEventKind::Unstable: return "Unstable";
  }
  return "?";
}

std::pair<ChairState, std::optional<Transition>> step(const ChairState& state, double kg,
                                                      SteadyMillis now) {
  const bool was_seated = std::holds_alternative<Seated>(state);
  const auto* transient = std::get_if<Transient>(&state);
  const bool left_seat = was_seated || (transient && transient->from_seated);

  switch (band_of(kg)) {
    case Band::Seated: {
      if (was_seated) {
        return {Seated{kg, std::get<Seated>(state).since}, std::nullopt};
      }
      std::optional<Transition> ev;
      if (!left_seat) ev = Transition{SeatEventKind::SatDown, kg};
      return {Seated{kg, now}, ev};
    }
    case Band::Empty: {
      std::optional<Transition> ev;
      if (left_seat) ev = Transition{SeatEventKind::StoodUp, kg};
      return {Empty{}, ev};
    }
    case Band::Transient: {
      if (!transient) {
        return {Transient{now, 0, kg, was_seated}, std::nullopt};
      }
      Transient next = *transient;
      next.last_kg = kg;
      const auto elapsed = (now - next.entered_at) / kRecheckInterval;
      const int due = static_cast<int>(std::clamp<std::int64_t>(elapsed, 0, kMaxRechecks));
      std::optional<Transition> ev;
      if (due > next.rechecks_done) {
        next.rechecks_done = due;
        if (due == kMaxRechecks) ev = Transition{SeatEventKind::Unstable, kg};
      }
      return {next, ev};
    }
  }
  return {state, std::nullopt};
}

std::optional<SeatEvent> Chair::feed_raw(RawCounts raw, SteadyMillis now) {
  return feed_kg(adc_to_kg(raw, cfg_), now);
}

std::optional<SeatEvent> Chair::feed_kg(double kg, SteadyMillis now) {
  last_stable_ = filter_reading(kg, last_stable_, cfg_);
  auto [next, transition] = step(state_, last_stable_, now);
  state_ = next;
  if (!transition) return std::nullopt;
  return SeatEvent{transition->kind, id_, now, transition->kg};
}

}  // namespace attend::seat
