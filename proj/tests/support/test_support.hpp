#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.
// Oracles deliberately avoid the library's own helpers.

#include <stdlib.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "attend/reference_stats.hpp"
#include "attend/roster.hpp"
#include "attend/types.hpp"
#include "attend/wire_protocol.hpp"

namespace testsupport {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "attend-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline attend::Timestamp at(const std::string& iso) { return attend::parse_iso(iso); }

// Published group means, age 18..22.
inline const std::map<std::pair<int, attend::Gender>, double>& reference_means() {
  using attend::Gender;
  static const std::map<std::pair<int, Gender>, double> m{
      {{18, Gender::Male}, 85.41},   {{19, Gender::Male}, 82.76},   {{20, Gender::Male}, 94.59},
      {{21, Gender::Male}, 85.44},   {{22, Gender::Male}, 92.52},   {{18, Gender::Female}, 76.96},
      {{19, Gender::Female}, 69.37}, {{20, Gender::Female}, 70.20}, {{21, Gender::Female}, 66.86},
      {{22, Gender::Female}, 65.11}};
  return m;
}

struct OracleCell {
  long double mean = 0;
  long double std = 0;
  std::size_t count = 0;
};

// Filter predicate and weight resolution written out from the rule text.
inline std::optional<double> oracle_weight(const attend::stats::RawRecord& r) {
  double w;
  if (r.weight_kg) {
    w = *r.weight_kg;
  } else {
    const double h = r.gender == attend::Gender::Male ? 1.70 : 1.60;
    w = *r.bmi * h * h;
  }
  if (r.age < 18 || r.age > 22 || w < 40.0) return std::nullopt;
  return w;
}

// Two-pass mean and population std in long double.
inline std::map<std::pair<int, attend::Gender>, OracleCell> oracle_table(
    const std::vector<attend::stats::RawRecord>& raw) {
  std::map<std::pair<int, attend::Gender>, std::vector<long double>> groups;
  for (const auto& r : raw) {
    if (auto w = oracle_weight(r)) groups[{r.age, r.gender}].push_back(*w);
  }
  std::map<std::pair<int, attend::Gender>, OracleCell> out;
  for (const auto& [key, xs] : groups) {
    long double sum = 0;
    for (auto x : xs) sum += x;
    const long double mean = sum / xs.size();
    long double ss = 0;
    for (auto x : xs) ss += (x - mean) * (x - mean);
    out[key] = {mean, std::sqrt(ss / xs.size()), xs.size()};
  }
  return out;
}

// Random raw records spanning both sides of every filter edge.
inline std::vector<attend::stats::RawRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> age(15, 25);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_real_distribution<double> weight(30.0, 130.0);
  std::uniform_real_distribution<double> bmi(12.0, 45.0);
  std::vector<attend::stats::RawRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    attend::stats::RawRecord r;
    r.age = age(rng);
    r.gender = coin(rng) ? attend::Gender::Male : attend::Gender::Female;
    if (coin(rng)) r.weight_kg = weight(rng);
    else r.bmi = bmi(rng);
    out.push_back(r);
  }
  return out;
}

// <10 Empty, [10,40) Transient, >=40 Seated, as 0/1/2.
inline int oracle_band(double kg) { return kg < 10.0 ? 0 : (kg < 40.0 ? 1 : 2); }

// A decimal number with a fractional part, or any run of 2+ digits not part
// of the timestamp, uid or course columns. Used to prove no weight leaks
// into the attendance file.
inline bool attendance_csv_has_weight(const std::string& text) {
  static const std::regex row(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2},[A-Za-z0-9_-]+,[0-9A-F]{8},ATTENDED$)");
  std::size_t start = 0;
  bool header = true;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    if (header) {
      header = false;
      if (line != "timestamp,course_id,uid,status") return true;
      continue;
    }
    if (!std::regex_match(line, row)) return true;
  }
  return false;
}

// Two courses on Monday and four students, all enrolled in CS101.
inline attend::roster::Roster demo_roster() {
  using namespace attend;
  roster::Roster r;
  r.add_student({CardUid::parse("04A1B2C3"), "Ayse", "Yilmaz", "3A", 20, Gender::Female});
  r.add_student({CardUid::parse("1B2C3D4E"), "Mehmet", "Demir", "3A", 21, Gender::Male});
  r.add_student({CardUid::parse("2C3D4E5F"), "Elif", "Kaya", "3A", 19, Gender::Female});
  r.add_student({CardUid::parse("3D4E5F60"), "Can", "Ozturk", "3A", 22, Gender::Male});
  r.add_student({CardUid::parse("5A5A5A5A"), "Deniz", "Aydin", "3B", 30, Gender::Male});
  r.add_course({"CS101", "Algorithms", roster::Weekday::MON, roster::TimeOfDay(9, 0), roster::TimeOfDay(10, 0)});
  r.add_course({"CS102", "Databases", roster::Weekday::MON, roster::TimeOfDay(10, 0), roster::TimeOfDay(11, 0)});
  for (const char* uid : {"04A1B2C3", "1B2C3D4E", "2C3D4E5F", "3D4E5F60", "5A5A5A5A"}) {
    r.enroll("CS101", CardUid::parse(uid));
  }
  r.enroll("CS102", CardUid::parse("04A1B2C3"));
  return r;
}

// Any valid frame, fields drawn uniformly within their grammar.
inline attend::wire::Frame random_frame(std::mt19937_64& rng) {
  namespace w = attend::wire;
  std::uniform_int_distribution<std::uint32_t> u32;
  std::uniform_int_distribution<int> kind(0, 5), len(0, 16), idlen(1, 16), byte(0, 255);
  const std::string arg_chars = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _.-";
  const std::string id_chars = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-";
  auto pick = [&](const std::string& from, int n) {
    std::string s;
    std::uniform_int_distribution<std::size_t> d(0, from.size() - 1);
    for (int i = 0; i < n; ++i) s.push_back(from[d(rng)]);
    return s;
  };
  auto b = [&] { return static_cast<std::uint8_t>(byte(rng)); };
  switch (kind(rng)) {
    case 0: return w::ScanEvent{attend::CardUid::from_bytes({b(), b(), b(), b()}), u32(rng)};
    case 1: return w::WeightEvent{pick(id_chars, idlen(rng)), u32(rng) % (w::kMaxGrams + 1), u32(rng)};
    case 2: return w::LcdCommand{static_cast<attend::verify::LcdCode>(u32(rng) % 6), pick(arg_chars, len(rng))};
    case 3: return w::TareCommand{pick(id_chars, idlen(rng))};
    case 4: return w::Ack{u32(rng)};
    default: return w::Nack{u32(rng), pick(id_chars, idlen(rng))};
  }
}

}  // namespace testsupport
