#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "attend/types.hpp"

namespace attend::roster {

struct Student {
  CardUid uid;
  std::string name;
  std::string surname;
  std::string class_label;
  int age = 0;
  Gender gender = Gender::Male;

  /// False for ages the reference table does not cover (stored, but flagged).
  bool in_reference_range() const noexcept;

  friend bool operator==(const Student&, const Student&) = default;
};

/// Partial update; unset fields are left alone.
struct StudentChanges {
  std::optional<std::string> name;
  std::optional<std::string> surname;
  std::optional<std::string> class_label;
  std::optional<int> age;
  std::optional<Gender> gender;
};

enum class Weekday { MON, TUE, WED, THU, FRI, SAT, SUN };

std::string_view to_string(Weekday d) noexcept;
std::optional<Weekday> parse_weekday(std::string_view token) noexcept;
Weekday weekday_of(Timestamp t) noexcept;

class TimeOfDay {
 public:
  constexpr TimeOfDay() = default;
  constexpr TimeOfDay(int hour, int minute) : minutes_(hour * 60 + minute) {}

  /// Strict `HH:MM`, 24h. Throws Error(parse).
  static TimeOfDay parse(std::string_view text);
  static TimeOfDay of(Timestamp t) noexcept;

  constexpr int minutes() const noexcept { return minutes_; }
  std::string str() const;

  friend constexpr auto operator<=>(const TimeOfDay&, const TimeOfDay&) = default;

 private:
  int minutes_ = 0;
};

struct Course {
  std::string course_id;
  std::string title;
  Weekday weekday = Weekday::MON;
  TimeOfDay start;
  TimeOfDay end;

  /// Slot membership is [start, end).
  bool contains(Weekday day, TimeOfDay t) const noexcept {
    return day == weekday && start <= t && t < end;
  }
  bool contains(Timestamp t) const noexcept { return contains(weekday_of(t), TimeOfDay::of(t)); }

  friend bool operator==(const Course&, const Course&) = default;
};

struct Enrollment {
  std::string course_id;
  CardUid uid;

  friend auto operator<=>(const Enrollment&, const Enrollment&) = default;
};

/// In-memory roster. Every mutation keeps referential integrity: an
/// enrollment always names an existing course and student.
class Roster {
 public:
  void add_student(Student s);
  /// Returns the names of fields whose value actually changed
  /// (name, surname, class, age, gender).
  std::set<std::string> update_student(const CardUid& uid, const StudentChanges& changes);
  /// Removes the student and all of their enrollments; returns the number
  /// of enrollments dropped.
  std::size_t delete_student(const CardUid& uid);

  /// Rejects a course whose slot overlaps an existing one (Error(ambiguity)).
  void add_course(Course c);

  void enroll(const std::string& course_id, const CardUid& uid);
  void remove_from_course(const std::string& course_id, const CardUid& uid);

  const Student* find_by_uid(const CardUid& uid) const;
  const Course* find_course(std::string_view course_id) const;
  bool is_enrolled(std::string_view course_id, const CardUid& uid) const;

  std::vector<Student> students() const;
  std::vector<Course> courses() const;
  const std::set<Enrollment>& enrollments() const noexcept { return enrollments_; }
  std::vector<CardUid> course_students(std::string_view course_id) const;
  std::vector<std::string> student_courses(const CardUid& uid) const;

  std::optional<Course> course_active_at(Weekday day, TimeOfDay t) const;
  std::optional<Course> course_active_at(Timestamp t) const;

  friend bool operator==(const Roster&, const Roster&) = default;

 private:
  std::map<CardUid, Student> students_;
  std::map<std::string, Course, std::less<>> courses_;
  std::set<Enrollment> enrollments_;
};

/// students.csv, courses.csv and enrollments.csv inside `dir`.
Roster load_roster(const std::filesystem::path& dir);
/// Each file is written to a temporary sibling and renamed into place.
void save_roster(const Roster& roster, const std::filesystem::path& dir);

}  // namespace attend::roster
