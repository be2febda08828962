#include "vlnpilot/percept.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vlnpilot {

namespace {

constexpr double kLintelThickness = 0.1;

/// A vertical prism: footprint extruded between y0 and y1.
struct Prism {
  enum class Shape { Slab, Box, Cylinder } shape = Shape::Box;
  ThickSegment slab{};
  Rect box{};
  Circle cylinder{};
  double y0 = 0.0;
  double y1 = 0.0;
  Rgb side_color{};
  Rgb cap_color{};
  std::string_view id{};

  std::optional<RayInterval<double>> intersect(const Vec2& origin, const Vec2& dir) const {
    switch (shape) {
      case Shape::Slab: return slab.intersect_ray(origin, dir);
      case Shape::Box: return box.intersect_ray(origin, dir);
      case Shape::Cylinder: return cylinder.intersect_ray(origin, dir);
    }
    return std::nullopt;
  }

  Rgb color_for_face(int face) const {
    return shape == Shape::Slab && face < 2 ? cap_color : side_color;
  }
};

std::vector<Prism> build_scene(const FloorPlan& plan) {
  std::vector<Prism> scene;
  scene.reserve(plan.walls.size() + plan.doors.size() + plan.furniture.size() + plan.objects.size());
  for (const auto& w : plan.walls) {
    Prism p{Prism::Shape::Slab};
    p.slab = w.solid();
    p.y0 = 0.0;
    p.y1 = plan.ceiling_height;
    p.side_color = palette::kWall;
    p.cap_color = palette::kDoorFrame;
    p.id = w.id;
    scene.push_back(p);
  }
  for (const auto& d : plan.doors) {
    if (d.height >= plan.ceiling_height) continue;
    Prism p{Prism::Shape::Slab};
    p.slab = ThickSegment{d.opening, kLintelThickness};
    p.y0 = d.height;
    p.y1 = plan.ceiling_height;
    p.side_color = palette::kDoorFrame;
    p.cap_color = palette::kDoorFrame;
    p.id = d.id;
    scene.push_back(p);
  }
  for (const auto& f : plan.furniture) {
    Prism p{Prism::Shape::Box};
    p.box = f.footprint;
    p.y0 = f.elevation;
    p.y1 = f.top();
    p.side_color = p.cap_color = f.color;
    p.id = f.id;
    scene.push_back(p);
  }
  for (const auto& o : plan.objects) {
    Prism p{Prism::Shape::Cylinder};
    p.cylinder = Circle{o.position, o.visual_radius()};
    p.y0 = o.elevation;
    p.y1 = o.top();
    p.side_color = p.cap_color = o.color;
    p.id = o.id;
    scene.push_back(p);
  }
  return scene;
}

bool blocked_in_scene(const std::vector<Prism>& scene, const Vec3& from, const Vec3& to,
                      std::string_view ignore_id) {
  const Vec2 o(from.x(), from.z());
  const Vec2 d(to.x() - from.x(), to.z() - from.z());
  const double dy = to.y() - from.y();
  for (const auto& p : scene) {
    if (!ignore_id.empty() && p.id == ignore_id) continue;
    auto hit = p.intersect(o, d);
    if (!hit) continue;
    const double a = std::max(hit->t_enter, 0.0);
    const double b = std::min(hit->t_exit, 1.0);
    if (b - a <= 1e-9) continue;
    const double ha = from.y() + a * dy;
    const double hb = from.y() + b * dy;
    if (std::min(ha, hb) < p.y1 && std::max(ha, hb) > p.y0) return true;
  }
  return false;
}

std::string normalize_token(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '_' || c == '-') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

double CameraModel::half_fov_tan() const { return std::tan(deg2rad(horizontal_fov / 2)); }

double CameraModel::focal_px() const { return (width / 2.0) / half_fov_tan(); }

void CameraModel::validate() const {
  if (!(horizontal_fov > 0.0 && horizontal_fov < 180.0))
    throw std::invalid_argument("camera fov must lie in (0, 180) degrees");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera resolution must be positive");
}

std::string_view to_string(DoorPosition p) {
  switch (p) {
    case DoorPosition::Left: return "left";
    case DoorPosition::Center: return "center";
    case DoorPosition::Right: return "right";
    case DoorPosition::NotVisible: return "not_visible";
  }
  return "not_visible";
}

std::optional<DoorPosition> parse_door_position(std::string_view s) {
  const std::string n = normalize_token(s);
  if (n == "left") return DoorPosition::Left;
  if (n == "center" || n == "centre") return DoorPosition::Center;
  if (n == "right") return DoorPosition::Right;
  if (n == "notvisible") return DoorPosition::NotVisible;
  return std::nullopt;
}

double normalized_abscissa(double bearing_deg, const CameraModel& camera) {
  return std::tan(deg2rad(bearing_deg)) / camera.half_fov_tan();
}

DoorPosition classify_door_position(double bearing_deg, const CameraModel& camera) {
  if (std::abs(bearing_deg) > camera.horizontal_fov / 2) return DoorPosition::NotVisible;
  if (std::abs(normalized_abscissa(bearing_deg, camera)) <= kCenterBand) return DoorPosition::Center;
  return bearing_deg < 0 ? DoorPosition::Left : DoorPosition::Right;
}

Vec2 camera_ground(const DronePose& pose, const CameraModel& camera) {
  return pose.ground() + camera.forward_offset * pose.heading();
}

double bearing_to(const DronePose& pose, const CameraModel& camera, const Vec2& target) {
  const Vec2 d = target - camera_ground(pose, camera);
  const double angle = rad2deg(std::atan2(d.y(), d.x()));
  return wrap_signed_degrees(pose.yaw - angle);
}

const VisibleObject* SemanticObservation::object(std::string_view id) const {
  for (const auto& o : visible_objects)
    if (o.id == id) return &o;
  return nullptr;
}

const VisibleDoor* SemanticObservation::door(std::string_view id) const {
  for (const auto& d : visible_doors)
    if (d.id == id) return &d;
  return nullptr;
}

bool segment_blocked(const FloorPlan& plan, const Vec3& from, const Vec3& to,
                     std::string_view ignore_id) {
  return blocked_in_scene(build_scene(plan), from, to, ignore_id);
}

SemanticObservation semantic_observe(const FloorPlan& plan, const DronePose& pose,
                                     const CameraModel& camera) {
  const auto scene = build_scene(plan);
  const Vec2 cam2 = camera_ground(pose, camera);
  const Vec3 cam(cam2.x(), pose.y, cam2.y());
  const double half_fov = camera.horizontal_fov / 2;

  SemanticObservation out;
  out.current_room_truth = room_of(plan, pose.x, pose.z);

  auto to3 = [](const Vec2& p, double y) { return Vec3(p.x(), y, p.y()); };

  for (const auto& o : plan.objects) {
    const Vec2 rel = o.position - cam2;
    const double dist = rel.norm();
    const double r = o.visual_radius();
    if (dist <= r) continue;
    const double bearing = bearing_to(pose, camera, o.position);
    if (std::abs(bearing) > half_fov) continue;
    const double mid_y = o.elevation + o.height / 2;
    if (blocked_in_scene(scene, cam, to3(o.position, mid_y), o.id)) continue;

    // 5x5 grid across the silhouette, edges pulled in slightly.
    const Vec2 side = Vec2(-rel.y(), rel.x()).normalized() * (0.98 * r);
    int blocked = 0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const Vec2 g = o.position + side * ((i - 2) / 2.0);
        const double y = o.elevation + o.height * (0.04 + 0.23 * j);
        blocked += blocked_in_scene(scene, cam, to3(g, y), o.id) ? 1 : 0;
      }

    out.visible_objects.push_back(
        {o.id, bearing, dist, 2.0 * rad2deg(std::asin(r / dist)), blocked / 25.0});
  }

  for (const auto& d : plan.doors) {
    const Vec2 center = d.opening.midpoint();
    const double dist = (center - cam2).norm();
    if (dist <= 1e-9) continue;
    const double bearing = bearing_to(pose, camera, center);
    if (std::abs(bearing) > half_fov) continue;
    const double y = std::clamp(pose.y, 0.05, d.height - 0.05);
    if (blocked_in_scene(scene, cam, to3(center, y), d.id)) continue;
    out.visible_doors.push_back({d.id, bearing, dist, classify_door_position(bearing, camera)});
  }
  return out;
}

RenderedImage render_frontal(const FloorPlan& plan, const DronePose& pose,
                             const CameraModel& camera) {
  camera.validate();
  const auto scene = build_scene(plan);
  RenderedImage img(camera.width, camera.height);

  const Vec2 origin = camera_ground(pose, camera);
  const Vec2 forward = pose.heading();
  const Vec2 right = -pose.left();
  const double f = camera.focal_px();
  const double cam_y = pose.y;

  struct ColumnHit {
    double s_in, s_out;
    const Prism* prism;
    Rgb face_color;
  };
  std::vector<ColumnHit> hits;

  for (int c = 0; c < camera.width; ++c) {
    const double xc = (c + 0.5 - camera.width / 2.0) / f;
    const Vec2 dir = forward + xc * right;
    hits.clear();
    for (const auto& p : scene) {
      auto h = p.intersect(origin, dir);
      if (!h || h->t_exit <= 0.0) continue;
      hits.push_back({std::max(h->t_enter, 0.0), h->t_exit, &p, p.color_for_face(h->face)});
    }
    for (int r = 0; r < camera.height; ++r) {
      const double yr = (camera.height / 2.0 - (r + 0.5)) / f;
      double best_s = std::numeric_limits<double>::infinity();
      Rgb color = palette::kVoid;
      if (yr < 0) {
        best_s = -cam_y / yr;
        color = palette::kFloor;
      } else if (yr > 0) {
        best_s = (plan.ceiling_height - cam_y) / yr;
        color = palette::kCeiling;
      }
      for (const auto& h : hits) {
        if (h.s_in >= best_s) continue;
        const double y_in = cam_y + h.s_in * yr;
        double s_hit = std::numeric_limits<double>::infinity();
        if (y_in >= h.prism->y0 && y_in <= h.prism->y1) {
          s_hit = h.s_in;
        } else if (y_in > h.prism->y1 && yr < 0) {
          s_hit = (h.prism->y1 - cam_y) / yr;  // top face
        } else if (y_in < h.prism->y0 && yr > 0) {
          s_hit = (h.prism->y0 - cam_y) / yr;  // underside
        }
        if (s_hit <= h.s_out && s_hit < best_s) {
          best_s = s_hit;
          color = h.face_color;
        }
      }
      img.set(c, r, color);
    }
  }
  return img;
}

RenderedImage render_rear(const FloorPlan& plan, const DronePose& pose, const CameraModel& camera) {
  DronePose turned = pose;
  turned.yaw = wrap_degrees(pose.yaw + 180.0);
  return render_frontal(plan, turned, camera);
}

FrameRenderer make_frame_renderer(const CameraModel& camera) {
  return [camera](const FloorPlan& plan, const DronePose& pose) {
    return Frames{render_frontal(plan, pose, camera).png(), render_rear(plan, pose, camera).png()};
  };
}

}  // namespace vlnpilot
