#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "attend/types.hpp"

namespace attend::stats {

inline constexpr int kMinAge = 18;
inline constexpr int kMaxAge = 22;
inline constexpr double kMinWeightKg = 40.0;
inline constexpr double kMaleHeightM = 1.70;
inline constexpr double kFemaleHeightM = 1.60;

struct RawRecord {
  int age = 0;
  Gender gender = Gender::Male;
  std::optional<double> weight_kg;
  std::optional<double> bmi;

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

enum class DatasetKind { GymMembers, ObesityClassification, MedicalCost };

std::string_view to_string(DatasetKind kind) noexcept;

/// Column mapping for one source dataset. `value_is_bmi` marks datasets that
/// publish BMI instead of body weight.
struct DatasetSchema {
  DatasetKind kind;
  std::string age_column;
  std::string gender_column;
  std::string value_column;
  bool value_is_bmi = false;

  static DatasetSchema for_kind(DatasetKind kind);
  /// Picks the schema whose columns all appear in `header`.
  static std::optional<DatasetSchema> detect(const std::vector<std::string>& header);
};

struct RowError {
  std::size_t row_index;  // 1-based data row (header excluded)
  std::string message;
};

struct IngestResult {
  std::vector<RawRecord> records;
  std::vector<RowError> skipped;
};

/// Throws Error(schema) when a mapped column is missing. Bad cells skip the
/// row and are reported in `skipped`.
IngestResult ingest_dataset(std::istream& source, const DatasetSchema& schema);
IngestResult ingest_dataset(std::string_view source, const DatasetSchema& schema);

/// weight = bmi * height^2 with a fixed height per gender (1.70 m / 1.60 m).
double derive_weight_from_bmi(double bmi, Gender gender);

/// Weight carried directly, else derived from BMI.
double resolved_weight(const RawRecord& record);

/// Keeps records aged 18..22 whose resolved weight is at least 40 kg.
/// Output records always carry `weight_kg`.
std::vector<RawRecord> filter_and_merge(std::span<const std::vector<RawRecord>> batches);
std::vector<RawRecord> filter_and_merge(const std::vector<RawRecord>& records);

struct GroupKey {
  int age;
  Gender gender;
  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

struct GroupStats {
  double mean_kg = 0.0;
  double std_kg = 0.0;  // population standard deviation
  std::size_t count = 0;
};

class ReferenceTable {
 public:
  ReferenceTable() = default;

  /// Builds from explicit cells; totals are recomputed from counts.
  static ReferenceTable from_entries(std::map<GroupKey, GroupStats> entries);

  const GroupStats* find(int age, Gender gender) const;
  const std::map<GroupKey, GroupStats>& entries() const noexcept { return entries_; }

  std::size_t total_count() const noexcept { return male_count_ + female_count_; }
  std::size_t male_count() const noexcept { return male_count_; }
  std::size_t female_count() const noexcept { return female_count_; }

  /// `age,gender,mean_kg,std_kg,count` with kg at 2 decimals.
  std::string to_csv() const;
  static ReferenceTable from_csv(std::string_view text);
  nlohmann::json to_json() const;

 private:
  std::map<GroupKey, GroupStats> entries_;
  std::size_t male_count_ = 0;
  std::size_t female_count_ = 0;
};

/// Per-(age, gender) mean and population standard deviation. Throws
/// Error(domain) if a record has not been filtered.
ReferenceTable build_reference_table(std::span<const RawRecord> sample);

/// 100 * (mean_male - mean_female) / mean_female. Throws Error(domain) when
/// either cell is missing.
double gender_gap_percent(const ReferenceTable& table, int age);

/// The published 18-22 group means with no dispersion or counts. Used when no
/// table built from source data is available.
ReferenceTable published_means_table();

}  // namespace attend::stats
