#include "vlnpilot/sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace vlnpilot {

namespace {

constexpr double kContactEpsilon = 1e-9;
constexpr double kLintelThickness = 0.1;
constexpr int kBisectionSteps = 48;

bool spans_overlap(double a0, double a1, double b0, double b1) { return a0 < b1 && b0 < a1; }

}  // namespace

std::string_view to_string(MotionCommand cmd) {
  static constexpr std::array<std::string_view, 12> names = {
      "A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2", "C3", "D1", "D2", "E"};
  return names[static_cast<std::size_t>(cmd)];
}

std::optional<MotionCommand> parse_command(std::string_view code) {
  while (!code.empty() && std::isspace(static_cast<unsigned char>(code.front()))) code.remove_prefix(1);
  while (!code.empty() && std::isspace(static_cast<unsigned char>(code.back()))) code.remove_suffix(1);
  for (MotionCommand c : kAllCommands) {
    const auto name = to_string(c);
    if (name.size() != code.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < name.size(); ++i)
      same &= std::toupper(static_cast<unsigned char>(code[i])) == name[i];
    if (same) return c;
  }
  return std::nullopt;
}

bool is_forward(MotionCommand cmd) {
  return cmd == MotionCommand::A1 || cmd == MotionCommand::A2 || cmd == MotionCommand::A3;
}
bool is_lateral(MotionCommand cmd) { return cmd == MotionCommand::D1 || cmd == MotionCommand::D2; }
bool is_translation(MotionCommand cmd) { return is_forward(cmd) || is_lateral(cmd); }
bool is_rotation(MotionCommand cmd) { return !is_translation(cmd) && cmd != MotionCommand::E; }

double magnitude(MotionCommand cmd) {
  switch (cmd) {
    case MotionCommand::A1: return 0.10;
    case MotionCommand::A2: return 0.25;
    case MotionCommand::A3: return 0.50;
    case MotionCommand::B1:
    case MotionCommand::C1: return 15.0;
    case MotionCommand::B2:
    case MotionCommand::C2: return 45.0;
    case MotionCommand::B3:
    case MotionCommand::C3: return 90.0;
    case MotionCommand::D1:
    case MotionCommand::D2: return 0.10;
    case MotionCommand::E: return 0.0;
  }
  return 0.0;
}

std::string_view to_string(RotationConvention c) {
  return c == RotationConvention::BRotatesRight ? "b-right" : "b-left";
}

std::optional<RotationConvention> parse_rotation_convention(std::string_view s) {
  if (s == "b-right") return RotationConvention::BRotatesRight;
  if (s == "b-left") return RotationConvention::BRotatesLeft;
  return std::nullopt;
}

double yaw_delta(MotionCommand cmd, RotationConvention convention) {
  if (!is_rotation(cmd)) return 0.0;
  const bool b_group =
      cmd == MotionCommand::B1 || cmd == MotionCommand::B2 || cmd == MotionCommand::B3;
  const bool clockwise = (convention == RotationConvention::BRotatesRight) == b_group;
  return clockwise ? -magnitude(cmd) : magnitude(cmd);
}

Vec2 DronePose::heading() const {
  const double r = deg2rad(yaw);
  return {std::cos(r), std::sin(r)};
}

Vec2 DronePose::left() const {
  const double r = deg2rad(yaw);
  return {-std::sin(r), std::cos(r)};
}

std::optional<NearestSolid> nearest_solid(const FloorPlan& plan, const DroneBody& body,
                                          const DronePose& pose) {
  const Vec2 p = pose.ground();
  const double lo = pose.y - body.height / 2;
  const double hi = pose.y + body.height / 2;
  std::optional<NearestSolid> best;
  auto consider = [&](const std::string& id, const Vec2& closest) {
    const double d = (p - closest).norm();
    if (!best || d < best->distance) best = NearestSolid{id, closest, d};
  };
  for (const auto& w : plan.walls) consider(w.id, w.solid().closest_point(p));
  for (const auto& f : plan.furniture)
    if (spans_overlap(lo, hi, f.elevation, f.top())) consider(f.id, f.footprint.closest_point(p));
  for (const auto& o : plan.objects)
    if (spans_overlap(lo, hi, o.elevation, o.top())) consider(o.id, o.footprint.closest_point(p));
  for (const auto& d : plan.doors)
    if (spans_overlap(lo, hi, d.height, plan.ceiling_height))
      consider(d.id + ":lintel", ThickSegment{d.opening, kLintelThickness}.closest_point(p));
  return best;
}

std::optional<Contact> find_contact(const FloorPlan& plan, const DroneBody& body,
                                    const DronePose& pose) {
  auto n = nearest_solid(plan, body, pose);
  if (n && n->distance <= body.bounding_radius + kContactEpsilon)
    return Contact{n->id, n->closest};
  return std::nullopt;
}

DronePose compose_rotation(const DronePose& pose, MotionCommand cmd,
                           RotationConvention convention) {
  if (!is_rotation(cmd))
    throw std::invalid_argument("not a rotation command: " + std::string(to_string(cmd)));
  DronePose out = pose;
  out.yaw = wrap_degrees(pose.yaw + yaw_delta(cmd, convention));
  return out;
}

StepResult apply_motion(const FloorPlan& plan, const SimConfig& config, const DronePose& pose,
                        MotionCommand cmd) {
  if (auto c = find_contact(plan, config.body, pose))
    throw StartInCollisionError("starting pose is in contact with '" + c->obstacle_id + "'");

  if (cmd == MotionCommand::E) return {pose, false, std::nullopt, 0.0};
  if (is_rotation(cmd))
    return {compose_rotation(pose, cmd, config.rotation), false, std::nullopt, magnitude(cmd)};

  Vec2 dir = pose.heading();
  if (cmd == MotionCommand::D1) dir = pose.left();
  if (cmd == MotionCommand::D2) dir = -pose.left();

  const double total = magnitude(cmd);
  const int n = std::max(1, static_cast<int>(std::ceil(total / config.substep - 1e-12)));
  const Vec2 start = pose.ground();
  auto at = [&](double s) {
    DronePose p = pose;
    const Vec2 g = start + dir * s;
    p.x = g.x();
    p.z = g.y();
    return p;
  };

  for (int k = 1; k <= n; ++k) {
    const double s = total * k / n;
    if (!find_contact(plan, config.body, at(s))) continue;
    // Refine the contact distance between the last free and first blocked sub-step.
    double free_s = total * (k - 1) / n;
    double blocked_s = s;
    for (int i = 0; i < kBisectionSteps; ++i) {
      const double mid = 0.5 * (free_s + blocked_s);
      (find_contact(plan, config.body, at(mid)) ? blocked_s : free_s) = mid;
    }
    const DronePose final_pose = at(free_s);
    auto hit = nearest_solid(plan, config.body, at(blocked_s));
    return {final_pose, true, Contact{hit->id, hit->closest}, free_s};
  }
  return {at(total), false, std::nullopt, total};
}

Observation observe(const FloorPlan& plan, const DronePose& pose, bool collided,
                    const FrameRenderer& renderer) {
  Observation obs{pose.x, pose.y, pose.z, pose.yaw, collided, std::nullopt};
  if (renderer) obs.frames = renderer(plan, pose);
  return obs;
}

Simulator::Simulator(std::shared_ptr<const FloorPlan> plan, SimConfig config,
                     FrameRenderer renderer)
    : plan_(std::move(plan)), config_(config), renderer_(std::move(renderer)) {}

Observation Simulator::reset(const DronePose& spawn) {
  if (auto c = find_contact(*plan_, config_.body, spawn))
    throw StartInCollisionError("spawn pose is in contact with '" + c->obstacle_id + "'");
  pose_ = spawn;
  pose_.yaw = wrap_degrees(spawn.yaw);
  collided_ = false;
  started_ = true;
  return observe();
}

StepResult Simulator::step(MotionCommand cmd) {
  if (!started_) throw std::logic_error("Simulator::step before reset");
  StepResult r = apply_motion(*plan_, config_, pose_, cmd);
  pose_ = r.pose;
  collided_ = r.collided;
  return r;
}

Observation Simulator::observe() { return vlnpilot::observe(*plan_, pose_, collided_, renderer_); }

}  // namespace vlnpilot
