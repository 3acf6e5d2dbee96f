#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace attend::session {

struct StreamEvent {
  std::uint64_t id;
  std::string type;
  nlohmann::json payload;

  nlohmann::json to_json() const;
};

/// Fan-out event log with monotonically increasing ids starting at 1.
/// Keeps the most recent `capacity` events; subscribers resume with the id
/// of the last event they saw.
class EventStream {
 public:
  explicit EventStream(std::size_t capacity = 10000) : capacity_(capacity) {}

  std::uint64_t publish(std::string type, nlohmann::json payload);

  /// Events with id > `after`, oldest first.
  std::vector<StreamEvent> since(std::uint64_t after) const;
  /// Like `since`, but blocks up to `timeout` when nothing is pending.
  std::vector<StreamEvent> wait_since(std::uint64_t after, std::chrono::milliseconds timeout) const;

  std::uint64_t last_id() const;
  std::size_t retained() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::deque<StreamEvent> events_;
  std::uint64_t next_id_ = 1;
};

}  // namespace attend::session
