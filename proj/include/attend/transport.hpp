#pragma once

#include <condition_variable>
#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace attend::wire {

/// One direction of an in-process byte stream. Reads return whatever is
/// buffered up to `max` bytes, so frames arrive fragmented like on a UART.
class ByteChannel {
 public:
  void write(std::string_view bytes);
  std::string read_some(std::size_t max);
  /// Blocks until data is available or the timeout expires.
  std::string read_some_wait(std::size_t max, std::chrono::milliseconds timeout);
  std::size_t available() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<char> buf_;
};

/// Full-duplex link between the device and the host side.
struct DuplexLink {
  ByteChannel to_host;
  ByteChannel to_device;
};

class SerialPort;

/// Exclusive host-side handle on a SerialPort. Releases on destruction.
class PortLease {
 public:
  PortLease(PortLease&&) noexcept;
  PortLease& operator=(PortLease&&) noexcept;
  PortLease(const PortLease&) = delete;
  PortLease& operator=(const PortLease&) = delete;
  ~PortLease();

  void write(std::string_view bytes);
  std::string read_some(std::size_t max);
  std::string read_some_wait(std::size_t max, std::chrono::milliseconds timeout);
  const std::string& owner() const noexcept { return owner_; }

 private:
  friend class SerialPort;
  PortLease(std::shared_ptr<SerialPort> port, std::string owner);
  void release() noexcept;

  std::shared_ptr<SerialPort> port_;
  std::string owner_;
};

/// Host end of the device link. Only one owner may hold it at a time; a
/// second `open` fails with Error(conflict) naming the current holder,
/// the way an OS serial port refuses a second process.
class SerialPort : public std::enable_shared_from_this<SerialPort> {
 public:
  static std::shared_ptr<SerialPort> create(std::shared_ptr<DuplexLink> link);

  PortLease open(std::string owner);
  std::optional<std::string> holder() const;

  /// Device side; not subject to the ownership rule.
  DuplexLink& link() noexcept { return *link_; }

 private:
  explicit SerialPort(std::shared_ptr<DuplexLink> link) : link_(std::move(link)) {}
  friend class PortLease;

  std::shared_ptr<DuplexLink> link_;
  mutable std::mutex mu_;
  std::optional<std::string> holder_;
};

}  // namespace attend::wire
