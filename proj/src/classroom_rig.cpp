#include "attend/classroom_rig.hpp"

#include <spdlog/spdlog.h>

#include "attend/error.hpp"

namespace attend {

namespace {

std::int64_t to_ms(Timestamp t) { return t.time_since_epoch().count(); }

}  // namespace

ClassroomRig::ClassroomRig(sim::Scenario scenario, session::ServiceConfig cfg, roster::Roster roster,
                           stats::ReferenceTable table, RigOptions options)
    : options_(options),
      device_(std::move(scenario), options.device),
      wall_ms_(to_ms(device_.clock().wall())),
      link_(std::make_shared<wire::DuplexLink>()),
      port_(wire::SerialPort::create(link_)),
      fragment_rng_(options.fragment_seed) {
  cfg.chair_ids.clear();
  for (const auto& c : device_.scenario().chairs) cfg.chair_ids.push_back(c.id);
  if (cfg.reader_chair.empty() && !cfg.chair_ids.empty()) cfg.reader_chair = cfg.chair_ids.front();
  service_ = std::make_unique<session::AttendanceService>(std::move(cfg), std::move(roster), std::move(table),
                                                          [this] { return wall_now(); });
}

Timestamp ClassroomRig::wall_now() const noexcept {
  return Timestamp{std::chrono::milliseconds{wall_ms_.load(std::memory_order_acquire)}};
}

void ClassroomRig::attach_host(std::string owner) {
  if (lease_) return;
  lease_.emplace(port_->open(std::move(owner)));
}

std::size_t ClassroomRig::chunk() {
  std::uniform_int_distribution<std::size_t> dist(1, std::max<std::size_t>(1, options_.max_chunk));
  return dist(fragment_rng_);
}

void ClassroomRig::step() {
  auto frames = device_.tick();
  wall_ms_.store(to_ms(device_.clock().wall()), std::memory_order_release);
  for (auto& f : frames) {
    link_->to_host.write(wire::encode(f));
    if (options_.keep_frame_log) frame_log_.push_back(std::move(f));
  }
  pump_host();
  pump_device();
}

void ClassroomRig::run_to(SteadyMillis t) {
  while (device_.clock().steady() < t) step();
}

void ClassroomRig::pump_host() {
  if (!lease_) return;
  while (link_->to_host.available() > 0) {
    for (const auto& line : host_splitter_.feed(lease_->read_some(chunk()))) {
      try {
        for (const auto& reply : service_->handle_frame(wire::decode(line))) {
          lease_->write(wire::encode(reply));
        }
      } catch (const Error& e) {
        if (e.code() != Errc::protocol) throw;
        ++protocol_errors_;
        spdlog::warn("host: {}", e.what());
      }
    }
  }
}

void ClassroomRig::pump_device() {
  while (link_->to_device.available() > 0) {
    for (const auto& line : device_splitter_.feed(link_->to_device.read_some(chunk()))) {
      try {
        device_.deliver(wire::decode(line));
      } catch (const Error& e) {
        if (e.code() != Errc::protocol) throw;
        ++protocol_errors_;
        spdlog::warn("device: {}", e.what());
      }
    }
  }
}

}  // namespace attend
