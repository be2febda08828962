#pragma once

#include "vlnpilot/geometry.hpp"
#include "vlnpilot/world.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vlnpilot {

/// The eleven-command motion vocabulary plus hover.
enum class MotionCommand : std::uint8_t { A1, A2, A3, B1, B2, B3, C1, C2, C3, D1, D2, E };

inline constexpr std::array<MotionCommand, 12> kAllCommands = {
    MotionCommand::A1, MotionCommand::A2, MotionCommand::A3, MotionCommand::B1,
    MotionCommand::B2, MotionCommand::B3, MotionCommand::C1, MotionCommand::C2,
    MotionCommand::C3, MotionCommand::D1, MotionCommand::D2, MotionCommand::E};

std::string_view to_string(MotionCommand cmd);
/// Accepts the exact code ("A1"), case-insensitive, surrounding blanks ignored.
std::optional<MotionCommand> parse_command(std::string_view code);

bool is_forward(MotionCommand cmd);
bool is_lateral(MotionCommand cmd);
bool is_translation(MotionCommand cmd);
bool is_rotation(MotionCommand cmd);

/// Meters for translations, degrees for rotations, 0 for E.
double magnitude(MotionCommand cmd);

/// Which rotation direction the B group means. The default treats B as
/// "rotate right" (clockwise seen from above, yaw decreases).
enum class RotationConvention { BRotatesRight, BRotatesLeft };

std::string_view to_string(RotationConvention c);
std::optional<RotationConvention> parse_rotation_convention(std::string_view s);

/// Signed yaw change of a rotation command in degrees (+ = counterclockwise).
double yaw_delta(MotionCommand cmd, RotationConvention convention);

/// Position in meters, yaw in degrees counterclockwise from +X in the X-Z plane.
struct DronePose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  Vec2 ground() const { return {x, z}; }
  /// Unit heading vector (cos yaw, sin yaw).
  Vec2 heading() const;
  /// Unit vector pointing to the drone's left.
  Vec2 left() const;

  friend bool operator==(const DronePose&, const DronePose&) = default;
};

struct DroneBody {
  /// Horizontal disc that covers the propeller tips.
  double bounding_radius = 0.12;
  double height = 0.05;
};

struct Contact {
  std::string obstacle_id;
  Vec2 point;
  friend bool operator==(const Contact& a, const Contact& b) {
    return a.obstacle_id == b.obstacle_id && a.point == b.point;
  }
};

struct StepResult {
  DronePose pose;
  bool collided = false;
  std::optional<Contact> contact;
  /// Meters (translations) or degrees (rotations) actually executed.
  double traveled = 0.0;

  friend bool operator==(const StepResult&, const StepResult&) = default;
};

struct SimConfig {
  DroneBody body;
  RotationConvention rotation = RotationConvention::BRotatesRight;
  double substep = 0.02;
};

class StartInCollisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solid the drone can hit, resolved from the plan for a given altitude.
struct NearestSolid {
  std::string id;
  Vec2 closest;
  double distance;
};

/// Nearest solid whose vertical span overlaps the drone body at `pose.y`.
std::optional<NearestSolid> nearest_solid(const FloorPlan& plan, const DroneBody& body,
                                          const DronePose& pose);

/// Contact if the body disc touches or overlaps any relevant solid.
std::optional<Contact> find_contact(const FloorPlan& plan, const DroneBody& body,
                                    const DronePose& pose);

/// Applies one command. Translations are sub-stepped and stop at the first
/// contact; rotations never collide; E is the identity.
/// Throws StartInCollisionError when `pose` already touches geometry.
StepResult apply_motion(const FloorPlan& plan, const SimConfig& config, const DronePose& pose,
                        MotionCommand cmd);

/// Throws std::invalid_argument for non-rotation commands.
DronePose compose_rotation(const DronePose& pose, MotionCommand cmd,
                           RotationConvention convention = RotationConvention::BRotatesRight);

/// Encoded frontal and rear frames (PNG bytes).
struct Frames {
  std::vector<std::uint8_t> front_png;
  std::vector<std::uint8_t> rear_png;
};

using FrameRenderer = std::function<Frames(const FloorPlan&, const DronePose&)>;

struct Observation {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
  bool collided = false;
  std::optional<Frames> frames;

  DronePose pose() const { return {x, y, z, yaw}; }
};

Observation observe(const FloorPlan& plan, const DronePose& pose, bool collided,
                    const FrameRenderer& renderer = {});

/// One episode's worth of mutable simulator state.
class SimSession {
 public:
  virtual ~SimSession() = default;
  virtual Observation reset(const DronePose& spawn) = 0;
  virtual StepResult step(MotionCommand cmd) = 0;
  virtual Observation observe() = 0;
};

class Simulator final : public SimSession {
 public:
  Simulator(std::shared_ptr<const FloorPlan> plan, SimConfig config,
            FrameRenderer renderer = {});

  Observation reset(const DronePose& spawn) override;
  StepResult step(MotionCommand cmd) override;
  Observation observe() override;

  const DronePose& pose() const { return pose_; }
  const FloorPlan& plan() const { return *plan_; }
  const SimConfig& config() const { return config_; }

 private:
  std::shared_ptr<const FloorPlan> plan_;
  SimConfig config_;
  FrameRenderer renderer_;
  DronePose pose_;
  bool collided_ = false;
  bool started_ = false;
};

}  // namespace vlnpilot
