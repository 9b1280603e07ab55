#pragma once

#include <memory>
#include <string>

#include "cdrive/harness/sim.hpp"

namespace cdrive::harness {

struct ServeConfig {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::string static_root = "static";
  double tick_rate = 2.0;  // planning cycles per wall-clock second
};

/// Interactive session: GET serves files under static_root, /ws upgrades to
/// the telemetry channel. Commands from clients are queued and applied by the
/// simulation thread between ticks, in arrival order.
class Server {
 public:
  Server(const world::Scenario& scenario, const planner::ModelBundle& bundle, const SimConfig& sim,
         const ServeConfig& cfg);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the network and simulation threads.
  void start();
  /// Bound port; valid after start().
  unsigned short port() const;
  void stop();
  /// Blocks until stop() or SIGINT/SIGTERM.
  void run_until_signal();
  /// Copy of the log so far.
  DriveLog log() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cdrive::harness
