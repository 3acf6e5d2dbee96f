#include "attend/reference_stats.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "attend/csv.hpp"
#include "attend/error.hpp"

namespace attend::stats {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Some exports write ages as "20.0"; anything non-integral is rejected.
std::optional<int> parse_age(std::string_view cell) {
  const auto v = parse_double(cell);
  if (!v || *v < 0 || *v != std::floor(*v) || *v > 200) return std::nullopt;
  return static_cast<int>(*v);
}

}  // namespace

std::string_view to_string(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::GymMembers: return "GymMembers";
    case DatasetKind::ObesityClassification: return "ObesityClassification";
    case DatasetKind::MedicalCost: return "MedicalCost";
  }
  return "?";
}

DatasetSchema DatasetSchema::for_kind(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::GymMembers: return {kind, "Age", "Gender", "Weight (kg)", false};
    case DatasetKind::ObesityClassification: return {kind, "Age", "Gender", "Weight", false};
    case DatasetKind::MedicalCost: return {kind, "age", "sex", "bmi", true};
  }
  throw Error(Errc::schema, "unknown dataset kind");
}

std::optional<DatasetSchema> DatasetSchema::detect(const std::vector<std::string>& header) {
  for (auto kind : {DatasetKind::GymMembers, DatasetKind::MedicalCost,
                    DatasetKind::ObesityClassification}) {
    auto schema = for_kind(kind);
    if (csv::find_column(header, schema.age_column) != std::string::npos &&
        csv::find_column(header, schema.gender_column) != std::string::npos &&
        csv::find_column(header, schema.value_column) != std::string::npos) {
      return schema;
    }
  }
  return std::nullopt;
}

IngestResult ingest_dataset(std::string_view source, const DatasetSchema& schema) {
  const csv::Table table = csv::read(source);
  IngestResult result;
  if (table.header.empty()) {
    throw Error(Errc::schema, "dataset has no header row");
  }
  const auto age_col = csv::find_column(table.header, schema.age_column);
  const auto gender_col = csv::find_column(table.header, schema.gender_column);
  const auto value_col = csv::find_column(table.header, schema.value_column);
  for (auto [col, name] : {std::pair{age_col, &schema.age_column},
                           std::pair{gender_col, &schema.gender_column},
                           std::pair{value_col, &schema.value_column}}) {
    if (col == std::string::npos) {
      throw Error(Errc::schema, fmt::format("{} dataset is missing column '{}'",
                                            to_string(schema.kind), *name));
    }
  }

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    auto skip = [&](std::string msg) { result.skipped.push_back({i + 1, std::move(msg)}); };
    auto cell = [&](std::size_t col) -> std::string_view {
      return col < row.size() ? std::string_view(row[col]) : std::string_view{};
    };
    const auto age = parse_age(cell(age_col));
    if (!age) {
      skip(fmt::format("unparseable age '{}'", cell(age_col)));
      continue;
    }
    const auto gender = parse_gender(cell(gender_col));
    if (!gender) {
      skip(fmt::format("unknown gender token '{}'", cell(gender_col)));
      continue;
    }
    const auto value = parse_double(cell(value_col));
    if (!value || *value <= 0) {
      skip(fmt::format("unparseable {} '{}'", schema.value_column, cell(value_col)));
      continue;
    }
    RawRecord rec{*age, *gender, std::nullopt, std::nullopt};
    (schema.value_is_bmi ? rec.bmi : rec.weight_kg) = *value;
    result.records.push_back(rec);
  }
  return result;
}

IngestResult ingest_dataset(std::istream& source, const DatasetSchema& schema) {
  std::ostringstream buf;
  buf << source.rdbuf();
  return ingest_dataset(std::string_view(buf.str()), schema);
}

double derive_weight_from_bmi(double bmi, Gender gender) {
  if (!(bmi > 0.0) || !std::isfinite(bmi)) {
    throw Error(Errc::domain, fmt::format("bmi must be positive, got {}", bmi));
  }
  const double h = gender == Gender::Male ? kMaleHeightM : kFemaleHeightM;
  return bmi * (h * h);
}

double resolved_weight(const RawRecord& record) {
  if (record.weight_kg) return *record.weight_kg;
  if (record.bmi) return derive_weight_from_bmi(*record.bmi, record.gender);
  throw Error(Errc::domain, "record carries neither weight nor bmi");
}

std::vector<RawRecord> filter_and_merge(std::span<const std::vector<RawRecord>> batches) {
  std::vector<RawRecord> out;
  for (const auto& batch : batches) {
    for (const auto& rec : batch) {
      if (rec.age < kMinAge || rec.age > kMaxAge) continue;
      const double w = resolved_weight(rec);
      if (w < kMinWeightKg) continue;
      RawRecord kept = rec;
      kept.weight_kg = w;
      out.push_back(kept);
    }
  }
  return out;
}

std::vector<RawRecord> filter_and_merge(const std::vector<RawRecord>& records) {
  return filter_and_merge(std::span<const std::vector<RawRecord>>(&records, 1));
}

ReferenceTable ReferenceTable::from_entries(std::map<GroupKey, GroupStats> entries) {
  ReferenceTable t;
  t.entries_ = std::move(entries);
  for (const auto& [key, s] : t.entries_) {
    (key.gender == Gender::Male ? t.male_count_ : t.female_count_) += s.count;
  }
  return t;
}

const GroupStats* ReferenceTable::find(int age, Gender gender) const {
  auto it = entries_.find(GroupKey{age, gender});
  return it == entries_.end() ? nullptr : &it->second;
}

std::string ReferenceTable::to_csv() const {
  std::string out = "age,gender,mean_kg,std_kg,count\n";
  for (const auto& [key, s] : entries_) {
    out += fmt::format("{},{},{:.2f},{:.2f},{}\n", key.age, gender_letter(key.gender), s.mean_kg,
                       s.std_kg, s.count);
  }
  return out;
}

ReferenceTable ReferenceTable::from_csv(std::string_view text) {
  const csv::Table table = csv::read(text);
  const std::vector<std::string> expected{"age", "gender", "mean_kg", "std_kg", "count"};
  if (table.header != expected) {
    throw Error(Errc::schema, "reference table header must be age,gender,mean_kg,std_kg,count");
  }
  std::map<GroupKey, GroupStats> entries;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    auto bad = [&] {
      return Error(Errc::parse, fmt::format("reference table line {}: malformed row", table.lines[i]));
    };
    if (row.size() != 5) throw bad();
    const auto age = parse_age(row[0]);
    const auto gender = parse_gender(row[1]);
    const auto mean = parse_double(row[2]);
    const auto sd = parse_double(row[3]);
    if (!age || !gender || !mean || !sd || *sd < 0 || row[4].empty()) throw bad();
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(row[4].data(), row[4].data() + row[4].size(), n);
    if (ec != std::errc{} || ptr != row[4].data() + row[4].size()) throw bad();
    if (!entries.emplace(GroupKey{*age, *gender}, GroupStats{*mean, *sd, n}).second) {
      throw Error(Errc::parse, fmt::format("reference table line {}: duplicate cell", table.lines[i]));
    }
  }
  return from_entries(std::move(entries));
}

nlohmann::json ReferenceTable::to_json() const {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, s] : entries_) {
    cells.push_back({{"age", key.age},
                     {"gender", std::string(1, gender_letter(key.gender))},
                     {"mean_kg", s.mean_kg},
                     {"std_kg", s.std_kg},
                     {"count", s.count}});
  }
  return {{"entries", cells},
          {"total_count", total_count()},
          {"male_count", male_count_},
          {"female_count", female_count_}};
}

ReferenceTable build_reference_table(std::span<const RawRecord> sample) {
  struct Accumulator {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  std::map<GroupKey, Accumulator> acc;
  for (const auto& rec : sample) {
    if (!rec.weight_kg || rec.age < kMinAge || rec.age > kMaxAge || *rec.weight_kg < kMinWeightKg) {
      throw Error(Errc::domain, fmt::format("record (age {}, {}) has not been filtered", rec.age,
                                            gender_name(rec.gender)));
    }
    // Welford update.
    auto& a = acc[GroupKey{rec.age, rec.gender}];
    const double x = *rec.weight_kg;
    ++a.n;
    const double delta = x - a.mean;
    a.mean += delta / static_cast<double>(a.n);
    a.m2 += delta * (x - a.mean);
  }
  std::map<GroupKey, GroupStats> entries;
  for (const auto& [key, a] : acc) {
    entries.emplace(key, GroupStats{a.mean, std::sqrt(std::max(0.0, a.m2 / static_cast<double>(a.n))), a.n});
  }
  return ReferenceTable::from_entries(std::move(entries));
}

double gender_gap_percent(const ReferenceTable& table, int age) {
  const auto* male = table.find(age, Gender::Male);
  const auto* female = table.find(age, Gender::Female);
  if (!male || !female) {
    throw Error(Errc::domain, fmt::format("age {} lacks a male or female reference cell", age));
  }
  if (female->mean_kg <= 0) throw Error(Errc::domain, "female mean must be positive");
  return 100.0 * (male->mean_kg - female->mean_kg) / female->mean_kg;
}

ReferenceTable published_means_table() {
  constexpr double male[] = {85.41, 82.76, 94.59, 85.44, 92.52};
  constexpr double female[] = {76.96, 69.37, 70.20, 66.86, 65.11};
  std::map<GroupKey, GroupStats> entries;
  for (int i = 0; i < 5; ++i) {
    entries[{kMinAge + i, Gender::Male}] = {male[i], 0.0, 0};
    entries[{kMinAge + i, Gender::Female}] = {female[i], 0.0, 0};
  }
  return ReferenceTable::from_entries(std::move(entries));
}

}  // namespace attend::stats
