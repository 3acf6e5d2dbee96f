#include "attend/roster.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "attend/csv.hpp"
#include "attend/error.hpp"
#include "attend/reference_stats.hpp"

namespace attend::roster {

namespace {

constexpr std::array<std::string_view, 7> kWeekdayNames{"MON", "TUE", "WED", "THU",
                                                         "FRI", "SAT", "SUN"};

bool is_token(std::string_view s) {
  return !s.empty() && s.size() <= 32 && std::all_of(s.begin(), s.end(), [](unsigned char c) {
           return std::isalnum(c) || c == '_' || c == '-';
         });
}

void validate(const Student& s) {
  if (s.age < 0 || s.age > 150) {
    throw Error(Errc::validation, fmt::format("student {}: implausible age {}", s.uid.str(), s.age));
  }
}

void validate(const Course& c) {
  if (!is_token(c.course_id)) {
    throw Error(Errc::validation, fmt::format("bad course id '{}'", c.course_id));
  }
  if (!(c.start < c.end)) {
    throw Error(Errc::validation, fmt::format("course {}: start must precede end", c.course_id));
  }
}

bool overlaps(const Course& a, const Course& b) {
  return a.weekday == b.weekday && a.start < b.end && b.start < a.end;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::io, fmt::format("cannot open {}", p.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomically(const std::filesystem::path& p, const std::string& content) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, fmt::format("cannot write {}", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw Error(Errc::io, fmt::format("short write to {}", tmp.string()));
  }
  std::filesystem::rename(tmp, p);
}

csv::Table read_table(const std::filesystem::path& p, const std::vector<std::string>& header) {
  auto table = csv::read(std::string_view(read_file(p)));
  if (table.header != header) {
    throw Error(Errc::schema, fmt::format("{}: expected header {}", p.filename().string(),
                                          csv::join(header)));
  }
  return table;
}

Error row_error(const std::filesystem::path& p, std::size_t line, const std::string& msg) {
  return Error(Errc::validation, fmt::format("{}:{}: {}", p.filename().string(), line, msg));
}

const std::vector<std::string> kStudentHeader{"uid", "name", "surname", "class", "age", "gender"};
const std::vector<std::string> kCourseHeader{"course_id", "title", "weekday", "start", "end"};
const std::vector<std::string> kEnrollmentHeader{"course_id", "uid"};

}  // namespace

bool Student::in_reference_range() const noexcept {
  return age >= stats::kMinAge && age <= stats::kMaxAge;
}

std::string_view to_string(Weekday d) noexcept { return kWeekdayNames[static_cast<std::size_t>(d)]; }

std::optional<Weekday> parse_weekday(std::string_view token) noexcept {
  for (std::size_t i = 0; i < kWeekdayNames.size(); ++i) {
    if (kWeekdayNames[i] == token) return static_cast<Weekday>(i);
  }
  return std::nullopt;
}

Weekday weekday_of(Timestamp t) noexcept {
  const std::chrono::weekday wd{std::chrono::floor<std::chrono::days>(t)};
  // iso_encoding: Monday = 1 .. Sunday = 7
  return static_cast<Weekday>(wd.iso_encoding() - 1);
}

TimeOfDay TimeOfDay::parse(std::string_view text) {
  auto fail = [&] { return Error(Errc::parse, fmt::format("bad time of day '{}'", text)); };
  if (text.size() != 5 || text[2] != ':') throw fail();
  int h = 0;
  int m = 0;
  auto digits = [&](std::size_t pos, int& out) {
    if (!std::isdigit(static_cast<unsigned char>(text[pos])) ||
        !std::isdigit(static_cast<unsigned char>(text[pos + 1]))) {
      throw fail();
    }
    out = (text[pos] - '0') * 10 + (text[pos + 1] - '0');
  };
  digits(0, h);
  digits(3, m);
  if (h > 23 || m > 59) throw fail();
  return TimeOfDay(h, m);
}

TimeOfDay TimeOfDay::of(Timestamp t) noexcept {
  using namespace std::chrono;
  const auto since_midnight = duration_cast<std::chrono::minutes>(t - floor<days>(t)).count();
  return TimeOfDay(static_cast<int>(since_midnight / 60), static_cast<int>(since_midnight % 60));
}

std::string TimeOfDay::str() const { return fmt::format("{:02}:{:02}", minutes_ / 60, minutes_ % 60); }

void Roster::add_student(Student s) {
  validate(s);
  if (students_.contains(s.uid)) {
    throw Error(Errc::conflict, fmt::format("student {} already exists", s.uid.str()));
  }
  auto uid = s.uid;
  students_.emplace(std::move(uid), std::move(s));
}

std::set<std::string> Roster::update_student(const CardUid& uid, const StudentChanges& changes) {
  auto it = students_.find(uid);
  if (it == students_.end()) {
    throw Error(Errc::not_found, fmt::format("student {} not found", uid.str()));
  }
  Student updated = it->second;
  std::set<std::string> modified;
  auto apply = [&](auto& field, const auto& change, const char* name) {
    if (change && field != *change) {
      field = *change;
      modified.insert(name);
    }
  };
  apply(updated.name, changes.name, "name");
  apply(updated.surname, changes.surname, "surname");
  apply(updated.class_label, changes.class_label, "class");
  apply(updated.age, changes.age, "age");
  apply(updated.gender, changes.gender, "gender");
  validate(updated);
  it->second = std::move(updated);
  return modified;
}

std::size_t Roster::delete_student(const CardUid& uid) {
  if (students_.erase(uid) == 0) {
    throw Error(Errc::not_found, fmt::format("student {} not found", uid.str()));
  }
  return std::erase_if(enrollments_, [&](const Enrollment& e) { return e.uid == uid; });
}

void Roster::add_course(Course c) {
  validate(c);
  if (courses_.contains(c.course_id)) {
    throw Error(Errc::conflict, fmt::format("course {} already exists", c.course_id));
  }
  for (const auto& [id, other] : courses_) {
    if (overlaps(c, other)) {
      throw Error(Errc::ambiguity, fmt::format("course {} overlaps {} on {}", c.course_id, id,
                                               to_string(c.weekday)));
    }
  }
  auto id = c.course_id;
  courses_.emplace(std::move(id), std::move(c));
}

void Roster::enroll(const std::string& course_id, const CardUid& uid) {
  if (!courses_.contains(course_id)) {
    throw Error(Errc::not_found, fmt::format("course {} not found", course_id));
  }
  if (!students_.contains(uid)) {
    throw Error(Errc::not_found, fmt::format("student {} not found", uid.str()));
  }
  if (!enrollments_.insert(Enrollment{course_id, uid}).second) {
    throw Error(Errc::conflict, fmt::format("{} already enrolled in {}", uid.str(), course_id));
  }
}

void Roster::remove_from_course(const std::string& course_id, const CardUid& uid) {
  if (enrollments_.erase(Enrollment{course_id, uid}) == 0) {
    throw Error(Errc::not_found, fmt::format("{} is not enrolled in {}", uid.str(), course_id));
  }
}

const Student* Roster::find_by_uid(const CardUid& uid) const {
  auto it = students_.find(uid);
  return it == students_.end() ? nullptr : &it->second;
}

const Course* Roster::find_course(std::string_view course_id) const {
  auto it = courses_.find(course_id);
  return it == courses_.end() ? nullptr : &it->second;
}

bool Roster::is_enrolled(std::string_view course_id, const CardUid& uid) const {
  return enrollments_.contains(Enrollment{std::string(course_id), uid});
}

std::vector<Student> Roster::students() const {
  std::vector<Student> out;
  out.reserve(students_.size());
  for (const auto& [uid, s] : students_) out.push_back(s);
  return out;
}

std::vector<Course> Roster::courses() const {
  std::vector<Course> out;
  out.reserve(courses_.size());
  for (const auto& [id, c] : courses_) out.push_back(c);
  return out;
}

std::vector<CardUid> Roster::course_students(std::string_view course_id) const {
  std::vector<CardUid> out;
  for (const auto& e : enrollments_) {
    if (e.course_id == course_id) out.push_back(e.uid);
  }
  return out;
}

std::vector<std::string> Roster::student_courses(const CardUid& uid) const {
  std::vector<std::string> out;
  for (const auto& e : enrollments_) {
    if (e.uid == uid) out.push_back(e.course_id);
  }
  return out;
}

std::optional<Course> Roster::course_active_at(Weekday day, TimeOfDay t) const {
  std::optional<Course> found;
  for (const auto& [id, c] : courses_) {
    if (!c.contains(day, t)) continue;
    if (found) {
      throw Error(Errc::ambiguity, fmt::format("courses {} and {} are both active at {} {}",
                                               found->course_id, id, to_string(day), t.str()));
    }
    found = c;
  }
  return found;
}

std::optional<Course> Roster::course_active_at(Timestamp t) const {
  return course_active_at(weekday_of(t), TimeOfDay::of(t));
}

Roster load_roster(const std::filesystem::path& dir) {
  Roster roster;

  const auto students_path = dir / "students.csv";
  const auto st = read_table(students_path, kStudentHeader);
  for (std::size_t i = 0; i < st.rows.size(); ++i) {
    const auto& r = st.rows[i];
    if (r.size() != kStudentHeader.size()) throw row_error(students_path, st.lines[i], "wrong arity");
    const auto uid = CardUid::try_parse(r[0]);
    if (!uid) throw row_error(students_path, st.lines[i], fmt::format("malformed uid '{}'", r[0]));
    int age = 0;
    auto [ptr, ec] = std::from_chars(r[4].data(), r[4].data() + r[4].size(), age);
    if (ec != std::errc{} || ptr != r[4].data() + r[4].size()) {
      throw row_error(students_path, st.lines[i], fmt::format("bad age '{}'", r[4]));
    }
    if (r[5] != "M" && r[5] != "F") {
      throw row_error(students_path, st.lines[i], fmt::format("gender must be M or F, got '{}'", r[5]));
    }
    try {
      roster.add_student({*uid, r[1], r[2], r[3], age, r[5] == "M" ? Gender::Male : Gender::Female});
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("students.csv:{}: {}", st.lines[i], e.what()));
    }
  }

  const auto courses_path = dir / "courses.csv";
  const auto ct = read_table(courses_path, kCourseHeader);
  for (std::size_t i = 0; i < ct.rows.size(); ++i) {
    const auto& r = ct.rows[i];
    if (r.size() != kCourseHeader.size()) throw row_error(courses_path, ct.lines[i], "wrong arity");
    const auto day = parse_weekday(r[2]);
    if (!day) throw row_error(courses_path, ct.lines[i], fmt::format("bad weekday '{}'", r[2]));
    try {
      roster.add_course({r[0], r[1], *day, TimeOfDay::parse(r[3]), TimeOfDay::parse(r[4])});
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("courses.csv:{}: {}", ct.lines[i], e.what()));
    }
  }

  const auto enrollments_path = dir / "enrollments.csv";
  const auto et = read_table(enrollments_path, kEnrollmentHeader);
  for (std::size_t i = 0; i < et.rows.size(); ++i) {
    const auto& r = et.rows[i];
    if (r.size() != kEnrollmentHeader.size()) {
      throw row_error(enrollments_path, et.lines[i], "wrong arity");
    }
    const auto uid = CardUid::try_parse(r[1]);
    if (!uid) throw row_error(enrollments_path, et.lines[i], fmt::format("malformed uid '{}'", r[1]));
    try {
      roster.enroll(r[0], *uid);
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("enrollments.csv:{}: {}", et.lines[i], e.what()));
    }
  }
  return roster;
}

void save_roster(const Roster& roster, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::string students = csv::join(kStudentHeader) + "\n";
  for (const auto& s : roster.students()) {
    students += csv::join({s.uid.str(), s.name, s.surname, s.class_label, std::to_string(s.age),
                           std::string(1, gender_letter(s.gender))}) +
                "\n";
  }
  std::string courses = csv::join(kCourseHeader) + "\n";
  for (const auto& c : roster.courses()) {
    courses += csv::join({c.course_id, c.title, std::string(to_string(c.weekday)), c.start.str(),
                          c.end.str()}) +
               "\n";
  }
  std::string enrollments = csv::join(kEnrollmentHeader) + "\n";
  for (const auto& e : roster.enrollments()) {
    enrollments += csv::join({e.course_id, e.uid.str()}) + "\n";
  }
  write_atomically(dir / "students.csv", students);
  write_atomically(dir / "courses.csv", courses);
  write_atomically(dir / "enrollments.csv", enrollments);
}

}  // namespace attend::roster
