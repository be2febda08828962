#include "vlnpilot/world.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace vlnpilot {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& msg) {
  throw PlanError(PlanError::Kind::Parse, "floor plan field '" + path + "': " + msg);
}

[[noreturn]] void invariant_error(const std::string& msg) {
  throw PlanError(PlanError::Kind::Invariant, "floor plan invariant violated: " + msg);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) field_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) field_error(path + "." + key, "missing");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  return v.get<double>();
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) field_error(path, "expected a string");
  return v.get<std::string>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, path + "." + key);
}

Vec2 point(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) field_error(path, "expected [x, z]");
  return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
}

Rect rect(const json& v, const std::string& path) {
  Rect r{point(require(v, "min", path), path + ".min"), point(require(v, "max", path), path + ".max")};
  if (r.width() <= 0.0 || r.depth() <= 0.0)
    field_error(path, "rectangle must have strictly positive width and depth");
  return r;
}

Segment segment(const json& v, const std::string& path) {
  return {point(require(v, "from", path), path + ".from"), point(require(v, "to", path), path + ".to")};
}

const json& array_field(const json& doc, const char* key) {
  const json& v = require(doc, key, "$");
  if (!v.is_array()) field_error(std::string("$.") + key, "expected an array");
  return v;
}

json point_json(const Vec2& p) { return json::array({p.x(), p.y()}); }
json rect_json(const Rect& r) { return {{"min", point_json(r.min)}, {"max", point_json(r.max)}}; }

}  // namespace

Rgb parse_rgb(std::string_view hex) {
  auto bad = [&] { return std::invalid_argument("bad color '" + std::string(hex) + "'"); };
  if (hex.size() != 7 || hex[0] != '#') throw bad();
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw bad();
  };
  auto byte = [&](std::size_t i) {
    return static_cast<std::uint8_t>(nibble(hex[i]) * 16 + nibble(hex[i + 1]));
  };
  return {byte(1), byte(3), byte(5)};
}

std::string to_hex(const Rgb& c) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "#";
  for (std::uint8_t v : {c.r, c.g, c.b}) {
    s += digits[v >> 4];
    s += digits[v & 15];
  }
  return s;
}

const Room* FloorPlan::find_room(std::string_view id) const {
  auto it = std::find_if(rooms.begin(), rooms.end(), [&](const Room& r) { return r.id == id; });
  return it == rooms.end() ? nullptr : &*it;
}

const Door* FloorPlan::find_door(std::string_view id) const {
  auto it = std::find_if(doors.begin(), doors.end(), [&](const Door& d) { return d.id == id; });
  return it == doors.end() ? nullptr : &*it;
}

const TargetObject* FloorPlan::find_object(std::string_view id) const {
  auto it = std::find_if(objects.begin(), objects.end(),
                         [&](const TargetObject& o) { return o.id == id; });
  return it == objects.end() ? nullptr : &*it;
}

const SpawnPoint* FloorPlan::find_spawn(std::string_view id) const {
  auto it = std::find_if(spawns.begin(), spawns.end(),
                         [&](const SpawnPoint& s) { return s.id == id; });
  return it == spawns.end() ? nullptr : &*it;
}

FloorPlan floor_plan_from_json(const json& doc) {
  if (!doc.is_object()) field_error("$", "expected an object");
  FloorPlan plan;
  plan.name = string(require(doc, "name", "$"), "$.name");
  plan.ceiling_height = number(require(doc, "ceiling_height", "$"), "$.ceiling_height");

  const json& rooms = array_field(doc, "rooms");
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    const std::string p = "$.rooms[" + std::to_string(i) + "]";
    const json& r = rooms[i];
    Room room;
    room.id = string(require(r, "id", p), p + ".id");
    room.label = r.contains("label") ? string(r["label"], p + ".label") : room.id;
    room.footprint = rect(require(r, "footprint", p), p + ".footprint");
    plan.rooms.push_back(std::move(room));
  }

  const json& walls = array_field(doc, "walls");
  for (std::size_t i = 0; i < walls.size(); ++i) {
    const std::string p = "$.walls[" + std::to_string(i) + "]";
    const json& w = walls[i];
    WallSegment wall;
    wall.id = w.contains("id") ? string(w["id"], p + ".id") : "wall" + std::to_string(i);
    wall.segment = segment(w, p);
    wall.thickness = number_or(w, "thickness", 0.1, p);
    if (wall.segment.length() <= 0.0) field_error(p, "wall segment has zero length");
    if (wall.thickness <= 0.0) field_error(p + ".thickness", "must be positive");
    plan.walls.push_back(std::move(wall));
  }

  const json& doors = array_field(doc, "doors");
  for (std::size_t i = 0; i < doors.size(); ++i) {
    const std::string p = "$.doors[" + std::to_string(i) + "]";
    const json& d = doors[i];
    Door door;
    door.id = string(require(d, "id", p), p + ".id");
    const json& pair = require(d, "rooms", p);
    if (!pair.is_array() || pair.size() != 2) field_error(p + ".rooms", "expected two room ids");
    door.rooms = {string(pair[0], p + ".rooms[0]"), string(pair[1], p + ".rooms[1]")};
    door.opening = segment(require(d, "opening", p), p + ".opening");
    door.width = d.contains("width") ? number(d["width"], p + ".width") : door.opening.length();
    door.height = number_or(d, "height", 2.1, p);
    plan.doors.push_back(std::move(door));
  }

  const json& furniture = array_field(doc, "furniture");
  for (std::size_t i = 0; i < furniture.size(); ++i) {
    const std::string p = "$.furniture[" + std::to_string(i) + "]";
    const json& f = furniture[i];
    Obstacle o;
    o.id = string(require(f, "id", p), p + ".id");
    o.label = f.contains("label") ? string(f["label"], p + ".label") : o.id;
    o.footprint = rect(require(f, "footprint", p), p + ".footprint");
    o.elevation = number_or(f, "elevation", 0.0, p);
    o.height = number(require(f, "height", p), p + ".height");
    try {
      o.color = parse_rgb(string(require(f, "color", p), p + ".color"));
    } catch (const std::invalid_argument& e) {
      field_error(p + ".color", e.what());
    }
    plan.furniture.push_back(std::move(o));
  }

  const json& objects = array_field(doc, "objects");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string p = "$.objects[" + std::to_string(i) + "]";
    const json& f = objects[i];
    TargetObject o;
    o.id = string(require(f, "id", p), p + ".id");
    o.label = f.contains("label") ? string(f["label"], p + ".label") : o.id;
    o.position = point(require(f, "position", p), p + ".position");
    o.footprint = rect(require(f, "footprint", p), p + ".footprint");
    o.elevation = number_or(f, "elevation", 0.0, p);
    o.height = number(require(f, "height", p), p + ".height");
    o.room = string(require(f, "room", p), p + ".room");
    try {
      o.color = parse_rgb(string(require(f, "color", p), p + ".color"));
    } catch (const std::invalid_argument& e) {
      field_error(p + ".color", e.what());
    }
    plan.objects.push_back(std::move(o));
  }

  if (auto it = doc.find("spawns"); it != doc.end()) {
    if (!it->is_array()) field_error("$.spawns", "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = "$.spawns[" + std::to_string(i) + "]";
      const json& s = (*it)[i];
      SpawnPoint sp;
      sp.id = string(require(s, "id", p), p + ".id");
      const json& pose = require(s, "pose", p);
      sp.x = number(require(pose, "x", p + ".pose"), p + ".pose.x");
      sp.y = number(require(pose, "y", p + ".pose"), p + ".pose.y");
      sp.z = number(require(pose, "z", p + ".pose"), p + ".pose.z");
      sp.yaw = number(require(pose, "yaw", p + ".pose"), p + ".pose.yaw");
      plan.spawns.push_back(std::move(sp));
    }
  }

  validate_floor_plan(plan);
  return plan;
}

FloorPlan parse_floor_plan(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "floor plan parse error at line " << line << ", column " << col << ": " << e.what();
    throw PlanError(PlanError::Kind::Parse, os.str());
  }
  return floor_plan_from_json(doc);
}

FloorPlan load_floor_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PlanError(PlanError::Kind::Io, "cannot open floor plan '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_floor_plan(ss.str());
  } catch (const PlanError& e) {
    throw PlanError(e.kind(), path.string() + ": " + e.what());
  }
}

json floor_plan_to_json(const FloorPlan& plan) {
  json doc;
  doc["name"] = plan.name;
  doc["ceiling_height"] = plan.ceiling_height;
  doc["rooms"] = json::array();
  for (const auto& r : plan.rooms)
    doc["rooms"].push_back({{"id", r.id}, {"label", r.label}, {"footprint", rect_json(r.footprint)}});
  doc["walls"] = json::array();
  for (const auto& w : plan.walls)
    doc["walls"].push_back({{"id", w.id},
                            {"from", point_json(w.segment.a)},
                            {"to", point_json(w.segment.b)},
                            {"thickness", w.thickness}});
  doc["doors"] = json::array();
  for (const auto& d : plan.doors)
    doc["doors"].push_back(
        {{"id", d.id},
         {"rooms", json::array({d.rooms[0], d.rooms[1]})},
         {"opening", {{"from", point_json(d.opening.a)}, {"to", point_json(d.opening.b)}}},
         {"width", d.width},
         {"height", d.height}});
  doc["furniture"] = json::array();
  for (const auto& f : plan.furniture)
    doc["furniture"].push_back({{"id", f.id},
                                {"label", f.label},
                                {"footprint", rect_json(f.footprint)},
                                {"elevation", f.elevation},
                                {"height", f.height},
                                {"color", to_hex(f.color)}});
  doc["objects"] = json::array();
  for (const auto& o : plan.objects)
    doc["objects"].push_back({{"id", o.id},
                              {"label", o.label},
                              {"position", point_json(o.position)},
                              {"footprint", rect_json(o.footprint)},
                              {"elevation", o.elevation},
                              {"height", o.height},
                              {"room", o.room},
                              {"color", to_hex(o.color)}});
  if (!plan.spawns.empty()) {
    doc["spawns"] = json::array();
    for (const auto& s : plan.spawns)
      doc["spawns"].push_back(
          {{"id", s.id}, {"pose", {{"x", s.x}, {"y", s.y}, {"z", s.z}, {"yaw", s.yaw}}}});
  }
  return doc;
}

void validate_floor_plan(const FloorPlan& plan) {
  if (!(plan.ceiling_height > 0.0)) invariant_error("ceiling_height must be positive");

  std::set<std::string> room_ids;
  for (const auto& r : plan.rooms) {
    if (!room_ids.insert(r.id).second) invariant_error("duplicate room id '" + r.id + "'");
    if (r.id == kUnknownRoom) invariant_error("room id 'unknown' is reserved");
    if (r.footprint.width() <= 0.0 || r.footprint.depth() <= 0.0)
      invariant_error("room '" + r.id + "' footprint must have positive width and depth");
  }
  for (std::size_t i = 0; i < plan.rooms.size(); ++i)
    for (std::size_t j = i + 1; j < plan.rooms.size(); ++j)
      if (plan.rooms[i].footprint.overlaps(plan.rooms[j].footprint))
        invariant_error("room footprints '" + plan.rooms[i].id + "' and '" + plan.rooms[j].id +
                        "' overlap");

  std::set<std::string> door_ids;
  for (const auto& d : plan.doors) {
    if (!door_ids.insert(d.id).second) invariant_error("duplicate door id '" + d.id + "'");
    for (const auto& rid : d.rooms)
      if (!room_ids.count(rid))
        invariant_error("door '" + d.id + "' references unknown room '" + rid + "'");
    if (d.rooms[0] == d.rooms[1])
      invariant_error("door '" + d.id + "' must connect two distinct rooms");
    if (!(d.width > 0.0)) invariant_error("door '" + d.id + "' width must be positive");
    if (std::abs(d.width - d.opening.length()) > 1e-6)
      invariant_error("door '" + d.id + "' width differs from its opening length");
    for (const auto& w : plan.walls)
      if (segments_cross_interior(w.segment, d.opening))
        invariant_error("wall '" + w.id + "' intersects the opening of door '" + d.id + "'");
  }

  std::set<std::string> object_ids;
  for (const auto& o : plan.objects) {
    if (!object_ids.insert(o.id).second) invariant_error("duplicate object id '" + o.id + "'");
    int containing = 0;
    for (const auto& r : plan.rooms) containing += r.footprint.contains(o.position) ? 1 : 0;
    if (containing != 1)
      invariant_error("object '" + o.id + "' position must lie inside exactly one room");
    const Room* room = plan.find_room(o.room);
    if (!room) invariant_error("object '" + o.id + "' references unknown room '" + o.room + "'");
    if (!room->footprint.contains(o.position))
      invariant_error("object '" + o.id + "' position lies outside its room '" + o.room + "'");
    if (!(o.height > 0.0)) invariant_error("object '" + o.id + "' height must be positive");
  }

  for (const auto& f : plan.furniture)
    if (!(f.height > 0.0)) invariant_error("furniture '" + f.id + "' height must be positive");
}

std::string room_of(const FloorPlan& plan, double x, double z) {
  const Vec2 p(x, z);
  for (const auto& r : plan.rooms)
    if (r.footprint.contains(p)) return r.id;
  return std::string(kUnknownRoom);
}

bool TopologicalMap::has_node(std::string_view id) const {
  return std::binary_search(nodes.begin(), nodes.end(), id,
                            [](const auto& a, const auto& b) { return std::string_view(a) < std::string_view(b); });
}

std::vector<std::string> TopologicalMap::neighbors(std::string_view id) const {
  std::vector<std::string> out;
  for (const auto& [a, b] : edges) {
    if (a == id) out.push_back(b);
    if (b == id) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TopologicalMap topological_map_of(const FloorPlan& plan) {
  TopologicalMap map;
  for (const auto& r : plan.rooms) map.nodes.push_back(r.id);
  std::sort(map.nodes.begin(), map.nodes.end());
  for (const auto& d : plan.doors) {
    auto e = std::minmax(d.rooms[0], d.rooms[1]);
    map.edges.emplace_back(e.first, e.second);
  }
  std::sort(map.edges.begin(), map.edges.end());
  map.edges.erase(std::unique(map.edges.begin(), map.edges.end()), map.edges.end());
  return map;
}

std::vector<std::string> room_path(const TopologicalMap& map, std::string_view from,
                                   std::string_view to) {
  if (!map.has_node(from)) throw std::invalid_argument("unknown room '" + std::string(from) + "'");
  if (!map.has_node(to)) throw std::invalid_argument("unknown room '" + std::string(to) + "'");

  // BFS distances to the goal, then a greedy walk picking the smallest id at
  // each hop. That yields the lexicographically smallest shortest path.
  std::map<std::string, int, std::less<>> dist;
  std::deque<std::string> queue{std::string(to)};
  dist[std::string(to)] = 0;
  while (!queue.empty()) {
    std::string cur = queue.front();
    queue.pop_front();
    for (auto& n : map.neighbors(cur)) {
      if (dist.count(n)) continue;
      dist[n] = dist[cur] + 1;
      queue.push_back(n);
    }
  }
  auto it = dist.find(from);
  if (it == dist.end())
    throw NoPathError("no path from '" + std::string(from) + "' to '" + std::string(to) + "'");

  std::vector<std::string> path{std::string(from)};
  int remaining = it->second;
  while (remaining > 0) {
    for (const auto& n : map.neighbors(path.back())) {
      auto d = dist.find(n);
      if (d != dist.end() && d->second == remaining - 1) {
        path.push_back(n);
        break;
      }
    }
    --remaining;
  }
  return path;
}

std::string serialize_map(const TopologicalMap& map) {
  json edges = json::array();
  for (const auto& [a, b] : map.edges) edges.push_back(json::array({a, b}));
  json doc = {{"nodes", map.nodes}, {"edges", edges}};
  return doc.dump();
}

std::vector<const Door*> doors_between(const FloorPlan& plan, std::string_view a,
                                       std::string_view b) {
  std::vector<const Door*> out;
  for (const auto& d : plan.doors)
    if ((d.rooms[0] == a && d.rooms[1] == b) || (d.rooms[0] == b && d.rooms[1] == a))
      out.push_back(&d);
  return out;
}

}  // namespace vlnpilot
