#pragma once

#include "vlnpilot/harness.hpp"
#include "vlnpilot/image.hpp"
#include "vlnpilot/percept.hpp"
#include "vlnpilot/world.hpp"

#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace vlnpilot::support {

inline std::filesystem::path asset_dir() { return VLNPILOT_ASSET_DIR; }
inline std::filesystem::path default_plan_path() { return asset_dir() / "plans" / "default_cabin.json"; }
inline std::filesystem::path benchmark_suite_path() { return asset_dir() / "suites" / "cabin_benchmark.json"; }

inline std::shared_ptr<const FloorPlan> default_plan() {
  static const auto plan = std::make_shared<const FloorPlan>(load_floor_plan(default_plan_path()));
  return plan;
}

inline DronePose spawn_pose(const FloorPlan& plan, const std::string& id) {
  const SpawnPoint* s = plan.find_spawn(id);
  return {s->x, s->y, s->z, s->yaw};
}

/// Pilot that replays a fixed list of (move, next state) pairs, then repeats the last one.
class ScriptedPilot final : public Pilot {
 public:
  struct Step {
    MotionCommand move;
    FsmState next;
  };
  explicit ScriptedPilot(std::vector<Step> steps) : steps_(std::move(steps)) {}

  Decision decide(const PilotContext& ctx) override {
    const Step& s = steps_[std::min<std::size_t>(calls_++, steps_.size() - 1)];
    PilotResponse r;
    r.room = ctx.semantic.current_room_truth;
    r.movement = s.move;
    r.state = s.next;
    r.description = "scripted";
    TranscriptRecord rec;
    rec.step = ctx.step;
    rec.state = ctx.current_state;
    rec.raw = serialize_response(r);
    rec.parsed = r;
    return {r, rec};
  }
  std::string kind() const override { return "scripted"; }

 private:
  std::vector<Step> steps_;
  std::size_t calls_ = 0;
};

inline EpisodeConfig episode_config(std::shared_ptr<const FloorPlan> plan, const DronePose& spawn,
                                    Query query, int max_steps = 50) {
  EpisodeConfig c;
  c.plan = std::move(plan);
  c.spawn = spawn;
  c.query = std::move(query);
  c.max_steps = max_steps;
  return c;
}

/// Uniform pose inside the plan's bounding box whose disc is at least `clearance`
/// from every solid.
inline DronePose random_free_pose(const FloorPlan& plan, std::mt19937_64& rng, double clearance,
                                  const DroneBody& body = {}) {
  double x0 = 1e9, z0 = 1e9, x1 = -1e9, z1 = -1e9;
  for (const auto& r : plan.rooms) {
    x0 = std::min(x0, r.footprint.min.x());
    z0 = std::min(z0, r.footprint.min.y());
    x1 = std::max(x1, r.footprint.max.x());
    z1 = std::max(z1, r.footprint.max.y());
  }
  std::uniform_real_distribution<double> ux(x0, x1), uz(z0, z1), uyaw(0.0, 360.0);
  for (;;) {
    DronePose p{ux(rng), 1.0, uz(rng), uyaw(rng)};
    const auto n = nearest_solid(plan, body, p);
    if (n && n->distance > body.bounding_radius + clearance && room_of(plan, p.x, p.z) != kUnknownRoom)
      return p;
  }
}

/// Point-in-solid test with every solid grown by `grow` meters (negative shrinks).
/// Walls and lintels are slabs, furniture boxes, targets upright cylinders.
inline bool occupied(const FloorPlan& plan, const Vec3& p, double grow, std::string_view skip) {
  const Vec2 g(p.x(), p.z());
  auto in_span = [&](double y0, double y1) { return p.y() > y0 - grow && p.y() < y1 + grow; };
  auto slab = [&](const Segment& s, double thickness) {
    const Vec2 u = (s.b - s.a).normalized();
    const Vec2 d = g - s.a;
    const double along = d.dot(u), across = d.x() * -u.y() + d.y() * u.x();
    return along > -grow && along < s.length() + grow && std::abs(across) < thickness / 2 + grow;
  };
  for (const auto& w : plan.walls)
    if (w.id != skip && in_span(0, plan.ceiling_height) && slab(w.segment, w.thickness)) return true;
  for (const auto& d : plan.doors)
    if (d.id != skip && in_span(d.height, plan.ceiling_height) && slab(d.opening, 0.1)) return true;
  for (const auto& f : plan.furniture)
    if (f.id != skip && in_span(f.elevation, f.top()) && g.x() > f.footprint.min.x() - grow &&
        g.x() < f.footprint.max.x() + grow && g.y() > f.footprint.min.y() - grow &&
        g.y() < f.footprint.max.y() + grow)
      return true;
  for (const auto& o : plan.objects)
    if (o.id != skip && in_span(o.elevation, o.top()) && (g - o.position).norm() < o.visual_radius() + grow)
      return true;
  return false;
}

/// Marches the segment in 5 mm steps. nullopt when the answer flips under a
/// 1 cm perturbation of every solid.
inline std::optional<bool> march_blocked(const FloorPlan& plan, const Vec3& from, const Vec3& to,
                                         std::string_view skip) {
  const int n = std::max(2, static_cast<int>((to - from).norm() / 0.005));
  bool grown = false, shrunk = false;
  for (int i = 1; i < n; ++i) {
    const Vec3 p = from + (to - from) * (static_cast<double>(i) / n);
    grown = grown || occupied(plan, p, 0.01, skip);
    shrunk = shrunk || occupied(plan, p, -0.01, skip);
    if (shrunk) break;
  }
  if (grown != shrunk) return std::nullopt;
  return shrunk;
}

/// Silhouette centroid of every pixel painted `color`, in angle space: each
/// row contributes the midpoint of the angles of its outer pixel edges. For an
/// upright cylinder that midpoint is exactly the bearing of its axis, where a
/// plain pixel mean drifts outward off-axis. nullopt if no such pixel exists.
inline std::optional<double> rendered_bearing(const RenderedImage& img, const Rgb& color,
                                              const CameraModel& camera) {
  const double f = (camera.width / 2.0) / std::tan(camera.horizontal_fov / 2 * M_PI / 180);
  auto angle = [&](double col) { return std::atan((col - camera.width / 2.0) / f) * 180 / M_PI; };
  double sum = 0;
  int rows = 0;
  for (int y = 0; y < img.height; ++y) {
    int lo = -1, hi = -1;
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y) == color) {
        if (lo < 0) lo = x;
        hi = x;
      }
    if (lo < 0) continue;
    sum += (angle(lo) + angle(hi + 1.0)) / 2;
    ++rows;
  }
  if (rows == 0) return std::nullopt;
  return sum / rows;
}

}  // namespace vlnpilot::support
