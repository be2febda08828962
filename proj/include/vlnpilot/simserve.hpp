#pragma once

#include "vlnpilot/harness.hpp"
#include "vlnpilot/percept.hpp"
#include "vlnpilot/sim.hpp"
#include "vlnpilot/world.hpp"

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

namespace vlnpilot {

inline constexpr std::size_t kMaxLineBytes = 8u << 20;
inline constexpr int kProtocolVersion = 1;

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// "HOST:PORT". Throws std::invalid_argument.
HostPort parse_host_port(std::string_view s);

/// Transport failure or protocol desync seen by a client.
class RemoteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line-oriented simulator server; one Simulator per connection.
class SimServer {
 public:
  SimServer(std::shared_ptr<const FloorPlan> plan, SimConfig sim, CameraModel camera,
            const HostPort& bind);
  ~SimServer();
  SimServer(const SimServer&) = delete;
  SimServer& operator=(const SimServer&) = delete;

  /// Actual bound port (useful with port 0).
  std::uint16_t port() const;
  /// Accepts in a background thread.
  void start();
  /// Accepts on the calling thread until stop().
  void run();
  /// Closes the listener and every live connection, then joins.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Client side of the protocol; drop-in replacement for a local Simulator.
class RemoteSession final : public SimSession {
 public:
  RemoteSession(HostPort server, bool frames);
  ~RemoteSession() override;

  Observation reset(const DronePose& spawn) override;
  StepResult step(MotionCommand cmd) override;
  Observation observe() override;

  const std::string& session_id() const { return session_; }
  /// Sends bye and closes.
  void close();

 private:
  struct Conn;
  std::unique_ptr<Conn> conn_;
  HostPort server_;
  bool frames_;
  std::string session_;
  Observation last_;
};

SessionFactory remote_sessions(HostPort server);

}  // namespace vlnpilot
