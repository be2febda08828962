#pragma once

#include "vlnpilot/image.hpp"
#include "vlnpilot/sim.hpp"
#include "vlnpilot/world.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vlnpilot {

struct CameraModel {
  double horizontal_fov = 80.0;  // degrees
  int width = 640;
  int height = 480;
  /// Camera position ahead of the drone center along the heading (meters).
  double forward_offset = 0.0;

  double half_fov_tan() const;
  /// Focal length in pixels.
  double focal_px() const;
  void validate() const;
};

enum class DoorPosition { Left, Center, Right, NotVisible };

std::string_view to_string(DoorPosition p);
/// Accepts "left", "center", "right", "not_visible" (case and separator insensitive).
std::optional<DoorPosition> parse_door_position(std::string_view s);

/// Fraction of the half-image width, in [-1, 1] inside the frustum.
double normalized_abscissa(double bearing_deg, const CameraModel& camera);

/// Entities inside +-10% of the half-width count as centered.
inline constexpr double kCenterBand = 0.10;

DoorPosition classify_door_position(double bearing_deg, const CameraModel& camera);

/// Camera position in the ground plane for a pose.
Vec2 camera_ground(const DronePose& pose, const CameraModel& camera);

/// Signed horizontal angle from the optical axis to `target`, degrees,
/// negative to the left, in (-180, 180].
double bearing_to(const DronePose& pose, const CameraModel& camera, const Vec2& target);

struct VisibleObject {
  std::string id;
  double bearing = 0.0;
  double distance = 0.0;
  double angular_width = 0.0;
  double occluded_fraction = 0.0;
};

struct VisibleDoor {
  std::string id;
  double bearing = 0.0;
  double distance = 0.0;
  DoorPosition position = DoorPosition::NotVisible;
};

struct SemanticObservation {
  std::vector<VisibleObject> visible_objects;
  std::vector<VisibleDoor> visible_doors;
  std::string current_room_truth;

  const VisibleObject* object(std::string_view id) const;
  const VisibleDoor* door(std::string_view id) const;
};

/// Ground-truth view: an entity is listed iff its center lies inside the
/// horizontal field of view and the ray to its center is unobstructed.
SemanticObservation semantic_observe(const FloorPlan& plan, const DronePose& pose,
                                     const CameraModel& camera);

/// Flat colors per semantic class. Furniture and targets use their own tags.
namespace palette {
inline constexpr Rgb kWall{200, 196, 184};
inline constexpr Rgb kDoorFrame{150, 40, 40};
inline constexpr Rgb kFloor{120, 110, 100};
inline constexpr Rgb kCeiling{235, 235, 230};
inline constexpr Rgb kVoid{0, 0, 0};
}  // namespace palette

RenderedImage render_frontal(const FloorPlan& plan, const DronePose& pose,
                             const CameraModel& camera);
/// Same camera turned 180 degrees; debugging output only.
RenderedImage render_rear(const FloorPlan& plan, const DronePose& pose, const CameraModel& camera);

/// Renderer suitable for injection into a Simulator.
FrameRenderer make_frame_renderer(const CameraModel& camera);

/// True if the straight 3D segment from `from` to `to` passes through any
/// wall, furniture, lintel or target (other than `ignore_id`). Points are
/// (x, y, z) with y up.
bool segment_blocked(const FloorPlan& plan, const Vec3& from, const Vec3& to,
                     std::string_view ignore_id = {});

}  // namespace vlnpilot
