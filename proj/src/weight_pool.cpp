#include "attend/weight_pool.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "attend/error.hpp"

namespace attend::pool {

nlohmann::json to_json(const AnomalyReport& r) {
  return {{"expected_kg", r.expected_kg},
          {"actual_kg", r.actual_kg},
          {"deviation_kg", r.deviation_kg},
          {"relative_deviation",
           r.relative_deviation ? nlohmann::json(*r.relative_deviation) : nlohmann::json(nullptr)},
          {"at", format_iso(r.at)}};
}

WeightPool::WeightPool(double tolerance, double empty_threshold_kg)
    : tolerance_(tolerance), empty_threshold_(empty_threshold_kg) {
  if (!(tolerance >= 0.0) || !(empty_threshold_kg >= 0.0)) {
    throw Error(Errc::domain, "pool tolerance and threshold must be non-negative");
  }
}

void WeightPool::add_member(const roster::Student& student, const stats::ReferenceTable& table) {
  if (contains(student.uid)) {
    throw Error(Errc::conflict, fmt::format("{} is already in the weight pool", student.uid.str()));
  }
  const auto* cell = table.find(student.age, student.gender);
  if (!cell) {
    throw Error(Errc::reference, fmt::format("no reference cell for age {} {}", student.age,
                                             gender_name(student.gender)));
  }
  members_.push_back({student.uid, cell->mean_kg});
  resum();
}

void WeightPool::remove_member(const CardUid& uid) {
  if (std::erase_if(members_, [&](const Member& m) { return m.uid == uid; }) == 0) {
    throw Error(Errc::not_found, fmt::format("{} is not in the weight pool", uid.str()));
  }
  resum();
}

bool WeightPool::contains(const CardUid& uid) const {
  return std::any_of(members_.begin(), members_.end(), [&](const Member& m) { return m.uid == uid; });
}

// Re-summed in member order so the total never accumulates add/remove drift.
void WeightPool::resum() {
  double total = 0.0;
  for (const auto& m : members_) total += m.reference_mean_kg;
  expected_total_ = total;
}

std::optional<AnomalyReport> WeightPool::compare(double actual_total_kg, Timestamp now) const {
  const double deviation = actual_total_kg - expected_total_;
  if (expected_total_ <= 0.0) {
    if (std::abs(deviation) <= empty_threshold_) return std::nullopt;
    return AnomalyReport{expected_total_, actual_total_kg, deviation, std::nullopt, now};
  }
  if (std::abs(deviation) <= tolerance_ * expected_total_) return std::nullopt;
  return AnomalyReport{expected_total_, actual_total_kg, deviation,
                       std::abs(deviation) / expected_total_, now};
}

double class_total_kg(std::span<const seat::ChairState> chairs) {
  double total = 0.0;
  for (const auto& c : chairs) {
    if (const auto* s = std::get_if<seat::Seated>(&c)) total += s->kg;
  }
  return total;
}

}  // namespace attend::pool
