#include "vlnpilot/pilot.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace vlnpilot {

namespace {

using M = MotionCommand;
using S = FsmState;

// Distance to the door center below which the pilot stops searching and aligns.
constexpr double kDoorNear = 1.0;
// The pilot aims at a point this far past the door center, so that its line
// of approach crosses the opening roughly square.
constexpr double kAimPast = 0.5;
// Stop short of the success radius by this much.
constexpr double kReachMargin = 0.1;
// Beyond this bearing a reaching pilot goes back to searching.
constexpr double kLostBearing = 30.0;

constexpr M kRotations[] = {M::B1, M::B2, M::B3, M::C1, M::C2, M::C3};
constexpr M kFineMoves[] = {M::D1, M::D2, M::B1, M::C1};

struct Choice {
  M move;
  S next;
};

class Policy {
 public:
  explicit Policy(const PilotContext& ctx) : ctx_(ctx), pose_(ctx.observation.pose()) {
    const Query& q = ctx.query;
    if (!ctx.plan.find_room(q.target_room))
      throw MissionImpossibleError("target room '" + q.target_room + "' is not in the plan");
    if (q.target_object) {
      object_ = ctx.plan.find_object(*q.target_object);
      if (!object_) throw MissionImpossibleError("target object '" + *q.target_object + "' is not in the plan");
      if (object_->room != q.target_room)
        throw MissionImpossibleError("target object '" + object_->id + "' is not in room '" +
                                     q.target_room + "'");
    }
    here_ = room_of(ctx.plan, pose_.x, pose_.z);
  }

  PilotResponse decide() {
    const Choice c = choose();
    PilotResponse r;
    r.room = ctx_.semantic.current_room_truth;
    r.movement = c.move;
    r.state = c.next;
    r.door_position = door_position();
    r.description = describe();
    return r;
  }

 private:
  Choice choose() {
    switch (ctx_.current_state) {
      case S::RecognizeRoom: return recognize();
      case S::StayOnRoom:
      case S::DescribeObject: return {M::E, S::Final};
      case S::SearchObject: return search_object();
      case S::ReachObject: return reach_object();
      case S::SearchOpenDoor: return search_door();
      case S::OrientTowardsDoor: return orient();
      case S::GoThroughDoor: return go_through();
      case S::Start:
      case S::Final: break;
    }
    throw MissionImpossibleError("no decision exists for state " +
                                 std::string(to_string(ctx_.current_state)));
  }

  // ---- geometry helpers

  bool safe(M m) const {
    if (!is_translation(m)) return true;
    return !apply_motion(ctx_.plan, ctx_.sim, pose_, m).collided;
  }

  DronePose preview(M m) const { return apply_motion(ctx_.plan, ctx_.sim, pose_, m).pose; }

  double bearing(const Vec2& target) const { return bearing_to(pose_, ctx_.camera, target); }
  double bearing_after(M m, const Vec2& target) const {
    return bearing_to(preview(m), ctx_.camera, target);
  }

  bool centered(double b) const {
    return classify_door_position(b, ctx_.camera) == DoorPosition::Center;
  }

  /// Safe move among `candidates` leaving the smallest |bearing|; ties keep list order.
  template <std::size_t N>
  std::optional<std::pair<M, double>> best(const M (&candidates)[N], const Vec2& target) const {
    std::optional<std::pair<M, double>> out;
    for (M m : candidates) {
      if (!safe(m)) continue;
      const double b = std::abs(bearing_after(m, target));
      if (!out || b < out->second - 1e-12) out = std::pair{m, b};
    }
    return out;
  }

  /// Rotation that strictly reduces |bearing| to `target`, if any.
  std::optional<M> improving_rotation(const Vec2& target) const {
    const auto b = best(kRotations, target);
    if (b && b->second < std::abs(bearing(target)) - 1e-9) return b->first;
    return std::nullopt;
  }

  const Door& route_door() {
    if (door_) return *door_;
    if (here_ == kUnknownRoom) throw MissionImpossibleError("drone is outside every room");
    std::vector<std::string> path;
    try {
      path = room_path(ctx_.map, here_, ctx_.query.target_room);
    } catch (const NoPathError& e) {
      throw MissionImpossibleError(e.what());
    }
    if (path.size() < 2) throw MissionImpossibleError("already in the target room");
    next_room_ = path[1];
    const auto doors = doors_between(ctx_.plan, here_, next_room_);
    if (doors.empty()) throw MissionImpossibleError("no door between " + here_ + " and " + next_room_);
    const Door* pick = doors.front();
    for (const Door* d : doors)
      if ((d->opening.midpoint() - pose_.ground()).norm() <
          (pick->opening.midpoint() - pose_.ground()).norm())
        pick = d;
    door_ = pick;
    return *door_;
  }

  Vec2 door_aim() {
    const Door& d = route_door();
    const Vec2 c = d.opening.midpoint();
    const Vec2 along = d.opening.b - d.opening.a;
    Vec2 n = Vec2(-along.y(), along.x()).normalized();
    if (room_of(ctx_.plan, c.x() + kAimPast * n.x(), c.y() + kAimPast * n.y()) != next_room_) n = -n;
    return c + kAimPast * n;
  }

  // ---- states

  Choice recognize() {
    if (here_ == ctx_.query.target_room) {
      if (!object_) return {M::B1, S::StayOnRoom};
      return {approach_move(object_->position), S::SearchObject};
    }
    return {approach_move(door_aim()), S::SearchOpenDoor};
  }

  /// Rotate toward `target` unless it is already centered, then advance.
  M approach_move(const Vec2& target) const {
    if (!centered(bearing(target))) {
      if (auto r = improving_rotation(target)) return *r;
    }
    return safe(M::A1) ? M::A1 : M::B1;
  }

  Choice search_door() {
    const Vec2 aim = door_aim();
    const double dist = (route_door().opening.midpoint() - pose_.ground()).norm();
    if (!centered(bearing(aim))) {
      if (auto r = improving_rotation(aim)) return {*r, S::SearchOpenDoor};
      // Finer than any rotation: let the alignment state use lateral steps.
      return safe(M::A1) ? Choice{M::A1, S::OrientTowardsDoor} : Choice{M::E, S::SearchOpenDoor};
    }
    if (!safe(M::A1)) return {M::E, S::SearchOpenDoor};
    if (dist > kDoorNear) return {M::A1, S::SearchOpenDoor};
    // Alignment and crossing alternate, and only the crossing state can hand
    // over to room recognition: start aligning when the crossing step will
    // fall on GoThroughDoor.
    const int n = steps_to_cross();
    return {M::A1, n >= 3 && n % 2 == 0 ? S::SearchOpenDoor : S::OrientTowardsDoor};
  }

  /// Straight A1 steps until the drone stands in another room.
  int steps_to_cross() const {
    DronePose p = pose_;
    for (int k = 1; k <= 40; ++k) {
      const StepResult r = apply_motion(ctx_.plan, ctx_.sim, p, M::A1);
      if (r.collided) break;
      p = r.pose;
      const std::string room = room_of(ctx_.plan, p.x, p.z);
      if (room != here_ && room != kUnknownRoom) return k;
    }
    return std::numeric_limits<int>::max();
  }

  Choice orient() {
    const Vec2 aim = door_aim();
    if (centered(bearing(aim)) && safe(M::A1)) return {M::A1, S::GoThroughDoor};
    const auto b = best(kFineMoves, aim);
    if (!b) return {M::B1, S::SearchOpenDoor};
    const double signed_after = bearing_after(b->first, aim);
    return {b->first, centered(signed_after) ? S::GoThroughDoor : S::SearchOpenDoor};
  }

  Choice go_through() {
    const DronePose p = preview(M::A1);
    const std::string after = room_of(ctx_.plan, p.x, p.z);
    const bool crossing = after != here_ && after != kUnknownRoom;
    // The opening may already be behind us: the crossing step can fall on an
    // alignment step, since the two states alternate.
    return {M::A1, crossing || !door_ahead() ? S::RecognizeRoom : S::OrientTowardsDoor};
  }

  bool door_ahead() {
    if (here_ == ctx_.query.target_room || here_ == kUnknownRoom) return false;
    try {
      const Door& d = route_door();
      const double dist = (d.opening.midpoint() - pose_.ground()).norm();
      return dist <= kDoorNear + 0.2 && std::abs(bearing(door_aim())) < 90.0;
    } catch (const MissionImpossibleError&) {
      return false;
    }
  }

  const TargetObject& target_object() const {
    if (!object_) throw MissionImpossibleError("query names no target object");
    return *object_;
  }

  Choice search_object() {
    const Vec2 target = target_object().position;
    if (centered(bearing(target))) return safe(M::A1) ? Choice{M::A1, S::ReachObject} : Choice{M::B1, S::SearchObject};
    if (auto r = improving_rotation(target)) return {*r, S::SearchObject};
    return safe(M::A1) ? Choice{M::A1, S::ReachObject} : Choice{M::B1, S::SearchObject};
  }

  Choice reach_object() {
    const Vec2 target = target_object().position;
    const double b = bearing(target);
    const double dist = (target - pose_.ground()).norm();
    const double near = ctx_.criteria.reach_distance - kReachMargin;
    if (std::abs(b) > kLostBearing) return {M::E, S::SearchObject};
    if (!centered(b)) {
      if (const auto m = best(kFineMoves, target)) return {m->first, S::ReachObject};
      return {M::E, S::SearchObject};
    }
    if (dist <= near) return {M::E, S::DescribeObject};
    if (safe(M::A1)) return {M::A1, S::ReachObject};
    if (dist <= ctx_.criteria.reach_distance) return {M::E, S::DescribeObject};
    return {M::E, S::ReachObject};
  }

  // ---- reporting

  DoorPosition door_position() {
    if (here_ != ctx_.query.target_room && here_ != kUnknownRoom) {
      try {
        if (const VisibleDoor* d = ctx_.semantic.door(route_door().id)) return d->position;
      } catch (const MissionImpossibleError&) {
      }
    }
    if (!ctx_.semantic.visible_doors.empty()) return ctx_.semantic.visible_doors.front().position;
    return DoorPosition::NotVisible;
  }

  std::string describe() const {
    char buf[160];
    std::string s = "In " + here_ + ".";
    if (object_) {
      if (const VisibleObject* o = ctx_.semantic.object(object_->id)) {
        std::snprintf(buf, sizeof buf, " %s visible at bearing %.1f deg, %.2f m.", object_->label.c_str(),
                      o->bearing, o->distance);
        s += buf;
      }
    }
    for (const auto& d : ctx_.semantic.visible_doors) {
      std::snprintf(buf, sizeof buf, " Door %s %s at %.2f m.", d.id.c_str(),
                    std::string(to_string(d.position)).c_str(), d.distance);
      s += buf;
    }
    return s;
  }

  const PilotContext& ctx_;
  DronePose pose_;
  std::string here_;
  const TargetObject* object_ = nullptr;
  const Door* door_ = nullptr;
  std::string next_room_;
};

}  // namespace

PilotResponse decide_oracle(const PilotContext& ctx) { return Policy(ctx).decide(); }

Decision OraclePilot::decide(const PilotContext& ctx) {
  const PilotResponse r = decide_oracle(ctx);
  TranscriptRecord rec;
  rec.step = ctx.step;
  rec.state = ctx.current_state;
  rec.raw = serialize_response(r);
  rec.parsed = r;
  rec.attempts = 1;
  return {r, rec};
}

}  // namespace vlnpilot
