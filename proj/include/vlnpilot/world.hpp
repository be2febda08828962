#pragma once

#include "vlnpilot/geometry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vlnpilot {

inline constexpr std::string_view kUnknownRoom = "unknown";

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Parses "#rrggbb".
Rgb parse_rgb(std::string_view hex);
std::string to_hex(const Rgb& c);

struct Room {
  std::string id;
  std::string label;
  Rect footprint;
};

struct WallSegment {
  std::string id;
  Segment segment;
  double thickness = 0.1;

  ThickSegment solid() const { return {segment, thickness}; }
};

struct Door {
  std::string id;
  std::array<std::string, 2> rooms;
  Segment opening;
  double width = 0.0;
  /// Clear height of the opening; a lintel fills the rest up to the ceiling.
  double height = 2.1;
};

/// Furniture: an axis-aligned box standing on (or hovering at) `elevation`.
struct Obstacle {
  std::string id;
  std::string label;
  Rect footprint;
  double elevation = 0.0;
  double height = 0.0;
  Rgb color;

  double top() const { return elevation + height; }
};

struct TargetObject {
  std::string id;
  std::string label;
  Vec2 position;
  Rect footprint;
  double elevation = 0.0;
  double height = 0.0;
  std::string room;
  Rgb color;

  double top() const { return elevation + height; }
  /// Radius of the upright cylinder inscribed in the footprint; this is the
  /// shape the renderer and the visibility queries use.
  double visual_radius() const { return 0.5 * std::min(footprint.width(), footprint.depth()); }
};

struct SpawnPoint {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
};

/// Metric 2.5D floor plan. Geometry lives in the X-Z plane, +Y up.
struct FloorPlan {
  std::string name;
  std::vector<Room> rooms;
  std::vector<WallSegment> walls;
  std::vector<Door> doors;
  std::vector<Obstacle> furniture;
  std::vector<TargetObject> objects;
  double ceiling_height = 2.5;
  /// Optional named starting poses shipped with the plan.
  std::vector<SpawnPoint> spawns;

  const Room* find_room(std::string_view id) const;
  const Door* find_door(std::string_view id) const;
  const TargetObject* find_object(std::string_view id) const;
  const SpawnPoint* find_spawn(std::string_view id) const;
};

class PlanError : public std::runtime_error {
 public:
  enum class Kind { Parse, Invariant, Io };
  PlanError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

FloorPlan load_floor_plan(const std::filesystem::path& path);
FloorPlan parse_floor_plan(std::string_view text);
FloorPlan floor_plan_from_json(const nlohmann::json& doc);
nlohmann::json floor_plan_to_json(const FloorPlan& plan);

/// Throws PlanError(Invariant) naming the first violated rule.
void validate_floor_plan(const FloorPlan& plan);

/// Id of the room whose footprint contains (x, z), or "unknown".
std::string room_of(const FloorPlan& plan, double x, double z);

struct TopologicalMap {
  std::vector<std::string> nodes;
  /// Each edge stored with the lexicographically smaller id first.
  std::vector<std::pair<std::string, std::string>> edges;

  bool has_node(std::string_view id) const;
  std::vector<std::string> neighbors(std::string_view id) const;
  friend bool operator==(const TopologicalMap&, const TopologicalMap&) = default;
};

TopologicalMap topological_map_of(const FloorPlan& plan);

/// Shortest path by edge count, endpoints included. Among equal-length paths
/// the one whose room-id sequence is lexicographically smallest wins.
std::vector<std::string> room_path(const TopologicalMap& map, std::string_view from,
                                   std::string_view to);

/// {"edges":[[a,b],...],"nodes":[...]} with sorted keys and stable ordering.
std::string serialize_map(const TopologicalMap& map);

/// Doors connecting rooms `a` and `b`, in plan order.
std::vector<const Door*> doors_between(const FloorPlan& plan, std::string_view a,
                                       std::string_view b);

}  // namespace vlnpilot
