#include "attend/attendance_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "attend/csv.hpp"
#include "attend/error.hpp"

namespace attend::session {

namespace {

constexpr std::string_view kHeader = "timestamp,course_id,uid,status\n";

[[noreturn]] void io_error(const std::string& what) {
  throw Error(Errc::io, fmt::format("{}: {}", what, std::strerror(errno)));
}

void write_all(int fd, std::string_view bytes, const std::string& path) {
  while (!bytes.empty()) {
    const auto n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error("write " + path);
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

AttendanceLog::AttendanceLog(std::filesystem::path path, bool sync_each_append)
    : path_(std::move(path)), sync_(sync_each_append) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());

  std::string content;
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    content = buf.str();
  }

  if (!content.empty() && content.back() != '\n') {
    const auto keep = content.rfind('\n');
    const std::size_t new_size = keep == std::string::npos ? 0 : keep + 1;
    spdlog::warn("{}: discarding truncated final line ({} bytes)", path_.string(),
                 content.size() - new_size);
    std::filesystem::resize_file(path_, new_size);
    content.resize(new_size);
    ++discarded_tail_;
  }

  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) io_error("open " + path_.string());

  if (content.empty()) {
    write_all(fd_, kHeader, path_.string());
    if (sync_) ::fsync(fd_);
    return;
  }

  const auto table = csv::read(std::string_view(content));
  if (csv::join(table.header) + "\n" != kHeader) {
    ::close(fd_);
    throw Error(Errc::schema, fmt::format("{}: unexpected header", path_.string()));
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    auto uid = r.size() == 4 ? CardUid::try_parse(r[2]) : std::nullopt;
    if (!uid) {
      ++malformed_rows_;
      spdlog::warn("{}:{}: skipping malformed attendance row", path_.string(), table.lines[i]);
      continue;
    }
    try {
      records_.push_back({parse_iso(r[0]), r[1], *uid, r[3]});
    } catch (const Error&) {
      ++malformed_rows_;
      spdlog::warn("{}:{}: skipping row with bad timestamp", path_.string(), table.lines[i]);
    }
  }
}

AttendanceLog::~AttendanceLog() {
  if (fd_ >= 0) ::close(fd_);
}

std::string AttendanceLog::format_row(const AttendanceRecord& r) {
  return csv::join({format_iso(r.timestamp), r.course_id, r.uid.str(), r.status}) + "\n";
}

void AttendanceLog::append(const AttendanceRecord& record) {
  write_all(fd_, format_row(record), path_.string());
  if (sync_ && ::fdatasync(fd_) != 0) io_error("fdatasync " + path_.string());
  records_.push_back(record);
}

std::vector<AttendanceRecord> AttendanceLog::for_course(std::string_view course_id) const {
  std::vector<AttendanceRecord> out;
  std::copy_if(records_.begin(), records_.end(), std::back_inserter(out),
               [&](const AttendanceRecord& r) { return r.course_id == course_id; });
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return out;
}

}  // namespace attend::session
