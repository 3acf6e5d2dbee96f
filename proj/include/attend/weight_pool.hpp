#pragma once

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "attend/reference_stats.hpp"
#include "attend/roster.hpp"
#include "attend/seat_model.hpp"
#include "attend/types.hpp"

namespace attend::pool {

struct Member {
  CardUid uid;
  double reference_mean_kg;  // group mean from the reference table, never a reading
};

struct AnomalyReport {
  double expected_kg;
  double actual_kg;
  double deviation_kg;                       // actual - expected
  std::optional<double> relative_deviation;  // |deviation| / expected; unset when expected is 0
  Timestamp at;
};

nlohmann::json to_json(const AnomalyReport& r);

/// Class-level expected total weight: the sum of the reference means of
/// every student who checked in.
class WeightPool {
 public:
  explicit WeightPool(double tolerance = 0.10, double empty_threshold_kg = 20.0);

  /// Throws Error(conflict) for a repeated uid and Error(reference) when the
  /// table has no cell for the student's age and gender.
  void add_member(const roster::Student& student, const stats::ReferenceTable& table);
  /// Throws Error(not_found).
  void remove_member(const CardUid& uid);
  bool contains(const CardUid& uid) const;

  /// Report iff |actual - expected| > tolerance * expected. An empty
  /// expectation uses the absolute threshold instead.
  std::optional<AnomalyReport> compare(double actual_total_kg, Timestamp now) const;

  double expected_total_kg() const noexcept { return expected_total_; }
  double tolerance() const noexcept { return tolerance_; }
  double empty_threshold_kg() const noexcept { return empty_threshold_; }
  const std::vector<Member>& members() const noexcept { return members_; }

 private:
  void resum();

  std::vector<Member> members_;
  double expected_total_ = 0.0;
  double tolerance_;
  double empty_threshold_;
};

/// Sum of Seated chair readings; Transient and Empty chairs count as 0.
double class_total_kg(std::span<const seat::ChairState> chairs);

}  // namespace attend::pool
