#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "attend/classroom_sim.hpp"
#include "attend/session_service.hpp"
#include "attend/transport.hpp"
#include "attend/wire_protocol.hpp"

namespace attend {

struct RigOptions {
  sim::DeviceConfig device;
  std::uint64_t fragment_seed = 1;
  std::size_t max_chunk = 7;  // reads pull 1..max_chunk bytes at a time
  bool keep_frame_log = true;
};

/// A simulated device wired to an AttendanceService through the byte-stream
/// serial link. The device runs lock-step on its virtual clock; each step
/// moves bytes across in randomly sized fragments.
class ClassroomRig {
 public:
  /// Chair ids and the reader chair in `cfg` are filled from the scenario.
  ClassroomRig(sim::Scenario scenario, session::ServiceConfig cfg, roster::Roster roster,
               stats::ReferenceTable table, RigOptions options = {});

  /// Claims the host end of the serial port. Throws Error(conflict) when
  /// another owner holds it.
  void attach_host(std::string owner = "attendance-service");
  void detach_host() { lease_.reset(); }
  bool host_attached() const noexcept { return lease_.has_value(); }
  std::shared_ptr<wire::SerialPort> port() const noexcept { return port_; }

  /// One device tick plus a full pump of both directions.
  void step();
  void run_to(SteadyMillis t);

  sim::DeviceSim& device() noexcept { return device_; }
  const sim::DeviceSim& device() const noexcept { return device_; }
  session::AttendanceService& service() noexcept { return *service_; }
  Timestamp wall_now() const noexcept;

  /// Device->host frames in emission order (when the log is kept).
  const std::vector<wire::Frame>& frame_log() const noexcept { return frame_log_; }
  std::size_t protocol_errors() const noexcept { return protocol_errors_; }

 private:
  void pump_host();
  void pump_device();
  std::size_t chunk();

  RigOptions options_;
  sim::DeviceSim device_;
  std::atomic<std::int64_t> wall_ms_;
  std::shared_ptr<wire::DuplexLink> link_;
  std::shared_ptr<wire::SerialPort> port_;
  std::optional<wire::PortLease> lease_;
  std::unique_ptr<session::AttendanceService> service_;
  wire::LineSplitter host_splitter_;
  wire::LineSplitter device_splitter_;
  std::mt19937_64 fragment_rng_;
  std::vector<wire::Frame> frame_log_;
  std::size_t protocol_errors_ = 0;
};

}  // namespace attend
