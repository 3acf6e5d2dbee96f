#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "attend/types.hpp"

namespace attend::session {

inline constexpr std::string_view kAttendedStatus = "ATTENDED";

/// One confirmed attendance. There is intentionally no weight field.
struct AttendanceRecord {
  Timestamp timestamp;
  std::string course_id;
  CardUid uid;
  std::string status{kAttendedStatus};

  friend bool operator==(const AttendanceRecord&, const AttendanceRecord&) = default;
};

/// Append-only `timestamp,course_id,uid,status` CSV. Each record goes out
/// in a single write(2) on an O_APPEND descriptor and is fsync'd. On open, a
/// final line missing its LF is treated as a torn write: it is cut from the
/// file and counted in `discarded_tail()`.
class AttendanceLog {
 public:
  explicit AttendanceLog(std::filesystem::path path, bool sync_each_append = true);
  ~AttendanceLog();
  AttendanceLog(const AttendanceLog&) = delete;
  AttendanceLog& operator=(const AttendanceLog&) = delete;

  void append(const AttendanceRecord& record);

  const std::vector<AttendanceRecord>& records() const noexcept { return records_; }
  /// Records for one course, ordered by timestamp (ties keep file order).
  std::vector<AttendanceRecord> for_course(std::string_view course_id) const;

  std::size_t discarded_tail() const noexcept { return discarded_tail_; }
  std::size_t malformed_rows() const noexcept { return malformed_rows_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  static std::string format_row(const AttendanceRecord& r);

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  bool sync_;
  std::vector<AttendanceRecord> records_;
  std::size_t discarded_tail_ = 0;
  std::size_t malformed_rows_ = 0;
};

}  // namespace attend::session
