#include "attend/transport.hpp"

#include <fmt/format.h>

#include "attend/error.hpp"

namespace attend::wire {

void ByteChannel::write(std::string_view bytes) {
  {
    std::lock_guard lock(mu_);
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
  }
  cv_.notify_all();
}

std::string ByteChannel::read_some(std::size_t max) {
  std::lock_guard lock(mu_);
  const std::size_t n = std::min(max, buf_.size());
  std::string out(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(n));
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

std::string ByteChannel::read_some_wait(std::size_t max, std::chrono::milliseconds timeout) {
  {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return !buf_.empty(); });
  }
  return read_some(max);
}

std::size_t ByteChannel::available() const {
  std::lock_guard lock(mu_);
  return buf_.size();
}

std::shared_ptr<SerialPort> SerialPort::create(std::shared_ptr<DuplexLink> link) {
  return std::shared_ptr<SerialPort>(new SerialPort(std::move(link)));
}

PortLease SerialPort::open(std::string owner) {
  std::lock_guard lock(mu_);
  if (holder_) {
    throw Error(Errc::conflict, fmt::format("port busy: held by {}", *holder_));
  }
  holder_ = owner;
  return PortLease(shared_from_this(), std::move(owner));
}

std::optional<std::string> SerialPort::holder() const {
  std::lock_guard lock(mu_);
  return holder_;
}

PortLease::PortLease(std::shared_ptr<SerialPort> port, std::string owner)
    : port_(std::move(port)), owner_(std::move(owner)) {}

PortLease::PortLease(PortLease&& other) noexcept
    : port_(std::move(other.port_)), owner_(std::move(other.owner_)) {}

PortLease& PortLease::operator=(PortLease&& other) noexcept {
  if (this != &other) {
    release();
    port_ = std::move(other.port_);
    owner_ = std::move(other.owner_);
  }
  return *this;
}

PortLease::~PortLease() { release(); }

void PortLease::release() noexcept {
  if (!port_) return;
  std::lock_guard lock(port_->mu_);
  port_->holder_.reset();
  port_.reset();
}

void PortLease::write(std::string_view bytes) { port_->link_->to_device.write(bytes); }

std::string PortLease::read_some(std::size_t max) { return port_->link_->to_host.read_some(max); }

std::string PortLease::read_some_wait(std::size_t max, std::chrono::milliseconds timeout) {
  return port_->link_->to_host.read_some_wait(max, timeout);
}

}  // namespace attend::wire
