#include "attend/event_stream.hpp"

#include <algorithm>

namespace attend::session {

nlohmann::json StreamEvent::to_json() const {
  return {{"event_id", id}, {"kind", type}, {"payload", payload}};
}

std::uint64_t EventStream::publish(std::string type, nlohmann::json payload) {
  std::uint64_t id = 0;
  {
    std::lock_guard lock(mu_);
    id = next_id_++;
    events_.push_back({id, std::move(type), std::move(payload)});
    while (events_.size() > capacity_) events_.pop_front();
  }
  cv_.notify_all();
  return id;
}

std::vector<StreamEvent> EventStream::since(std::uint64_t after) const {
  std::lock_guard lock(mu_);
  auto it = std::upper_bound(events_.begin(), events_.end(), after,
                             [](std::uint64_t id, const StreamEvent& e) { return id < e.id; });
  return {it, events_.end()};
}

std::vector<StreamEvent> EventStream::wait_since(std::uint64_t after,
                                                 std::chrono::milliseconds timeout) const {
  {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return next_id_ - 1 > after; });
  }
  return since(after);
}

std::uint64_t EventStream::last_id() const {
  std::lock_guard lock(mu_);
  return next_id_ - 1;
}

std::size_t EventStream::retained() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

}  // namespace attend::session
