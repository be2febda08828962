#include "support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <climits>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>

using namespace vlnpilot;
using nlohmann::json;

namespace {

json default_json() {
  std::ifstream in(support::default_plan_path());
  return json::parse(in);
}

PlanError::Kind error_kind(const json& doc) {
  try {
    floor_plan_from_json(doc);
  } catch (const PlanError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "plan was accepted";
  return PlanError::Kind::Io;
}

std::string error_text(const json& doc) {
  try {
    floor_plan_from_json(doc);
  } catch (const PlanError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(World, DefaultPlanShape) {
  const auto plan = support::default_plan();
  EXPECT_EQ(plan->rooms.size(), 3u);
  EXPECT_EQ(plan->doors.size(), 2u);
  EXPECT_EQ(plan->objects.size(), 3u);
  EXPECT_EQ(plan->find_object("refrigerator")->room, "living_kitchen");
  EXPECT_EQ(plan->find_object("mirror")->room, "bedroom");
  EXPECT_EQ(plan->find_object("sink")->room, "bathroom");
  EXPECT_EQ(plan->spawns.size(), 3u);
}

TEST(World, RoomCenters) {
  const auto plan = support::default_plan();
  EXPECT_EQ(room_of(*plan, 3.0, 2.5), "living_kitchen");
  EXPECT_EQ(room_of(*plan, 8.0, 2.5), "bedroom");
  EXPECT_EQ(room_of(*plan, 11.5, 2.5), "bathroom");
  EXPECT_EQ(room_of(*plan, -1.0, 2.5), "unknown");
  EXPECT_EQ(room_of(*plan, 3.0, 7.0), "unknown");
}

TEST(World, RoomOfMatchesBruteForce) {
  const auto plan = support::default_plan();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-1.0, 14.0), uz(-1.0, 6.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = ux(rng), z = uz(rng);
    std::vector<std::string> hits;
    for (const auto& r : plan->rooms)
      if (x >= r.footprint.min.x() && x < r.footprint.max.x() && z >= r.footprint.min.y() &&
          z < r.footprint.max.y())
        hits.push_back(r.id);
    ASSERT_LE(hits.size(), 1u);
    EXPECT_EQ(room_of(*plan, x, z), hits.empty() ? "unknown" : hits.front()) << x << "," << z;
  }
}

TEST(World, DefaultTopology) {
  const auto plan = support::default_plan();
  const auto map = topological_map_of(*plan);
  EXPECT_EQ(map.nodes, (std::vector<std::string>{"bathroom", "bedroom", "living_kitchen"}));
  ASSERT_EQ(map.edges.size(), 2u);
  EXPECT_EQ(room_path(map, "living_kitchen", "bathroom"),
            (std::vector<std::string>{"living_kitchen", "bedroom", "bathroom"}));
  EXPECT_EQ(room_path(map, "bedroom", "bedroom"), (std::vector<std::string>{"bedroom"}));
  EXPECT_EQ(serialize_map(map),
            R"({"edges":[["bathroom","bedroom"],["bedroom","living_kitchen"]],"nodes":["bathroom","bedroom","living_kitchen"]})");
}

TEST(World, DoorAdjacencyMatchesGeometry) {
  // Independent check: a door joins the two rooms whose footprints touch its
  // opening midpoint from either side.
  const auto plan = support::default_plan();
  std::set<std::pair<std::string, std::string>> expected;
  for (const auto& d : plan->doors) {
    const Vec2 m = d.opening.midpoint();
    const Vec2 along = (d.opening.b - d.opening.a).normalized();
    const Vec2 n(-along.y(), along.x());
    const Vec2 p = m + 0.05 * n, q = m - 0.05 * n;
    std::string a, b;
    for (const auto& r : plan->rooms) {
      if (r.footprint.contains(p)) a = r.id;
      if (r.footprint.contains(q)) b = r.id;
    }
    ASSERT_FALSE(a.empty());
    ASSERT_FALSE(b.empty());
    expected.insert(std::minmax(a, b));
  }
  const auto map = topological_map_of(*plan);
  const std::set<std::pair<std::string, std::string>> got(map.edges.begin(), map.edges.end());
  EXPECT_EQ(got, expected);
}

TEST(World, UnknownRoomInDoorIsInvariantError) {
  json doc = default_json();
  doc["doors"][0]["rooms"][1] = "garage";
  EXPECT_EQ(error_kind(doc), PlanError::Kind::Invariant);
  EXPECT_NE(error_text(doc).find("garage"), std::string::npos);
}

TEST(World, InvariantViolations) {
  {
    json doc = default_json();
    doc["rooms"][1]["footprint"]["min"][0] = 5.0;  // overlaps living room
    EXPECT_NE(error_text(doc).find("overlap"), std::string::npos);
  }
  {
    json doc = default_json();
    doc["doors"][0]["width"] = 1.5;
    EXPECT_NE(error_text(doc).find("width"), std::string::npos);
  }
  {
    json doc = default_json();
    doc["objects"][0]["position"] = json::array({8.0, 2.0});  // bedroom, declared kitchen
    EXPECT_EQ(error_kind(doc), PlanError::Kind::Invariant);
  }
  {
    json doc = default_json();
    doc["walls"].push_back({{"id", "blocker"}, {"from", {5.5, 2.5}}, {"to", {6.5, 2.5}}, {"thickness", 0.1}});
    EXPECT_NE(error_text(doc).find("blocker"), std::string::npos);
  }
  {
    json doc = default_json();
    doc["rooms"][0]["footprint"]["max"][1] = 0.0;
    EXPECT_NE(error_text(doc).find("positive"), std::string::npos);
  }
}

TEST(World, ParseErrorsCarryContext) {
  try {
    parse_floor_plan("{\n  \"name\": \"x\",\n  \"rooms\": [\n}");
    FAIL();
  } catch (const PlanError& e) {
    EXPECT_EQ(e.kind(), PlanError::Kind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  json doc = default_json();
  doc["rooms"][0]["footprint"]["min"] = "nope";
  EXPECT_EQ(error_kind(doc), PlanError::Kind::Parse);
  EXPECT_NE(error_text(doc).find("rooms"), std::string::npos);
  EXPECT_THROW(load_floor_plan("/nonexistent/plan.json"), PlanError);
}

TEST(World, ZeroDoorPlanLoads) {
  json doc = default_json();
  doc["doors"] = json::array();
  const FloorPlan plan = floor_plan_from_json(doc);
  const auto map = topological_map_of(plan);
  EXPECT_EQ(map.nodes.size(), 3u);
  EXPECT_TRUE(map.edges.empty());
  EXPECT_THROW(room_path(map, "bedroom", "bathroom"), NoPathError);
}

TEST(World, JsonRoundTrip) {
  const auto plan = support::default_plan();
  const FloorPlan again = floor_plan_from_json(floor_plan_to_json(*plan));
  EXPECT_EQ(floor_plan_to_json(again), floor_plan_to_json(*plan));
}

TEST(World, TopologyIgnoresDeclarationOrder) {
  json doc = default_json();
  const auto base = topological_map_of(floor_plan_from_json(doc));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(doc["rooms"].begin(), doc["rooms"].end(), rng);
    std::shuffle(doc["doors"].begin(), doc["doors"].end(), rng);
    for (auto& d : doc["doors"])
      if (rng() & 1) std::swap(d["rooms"][0], d["rooms"][1]);
    EXPECT_EQ(topological_map_of(floor_plan_from_json(doc)), base);
  }
}

namespace {

// Enumerates every simple path; the oracle keeps the shortest, then the
// lexicographically smallest.
std::optional<std::vector<std::string>> brute_path(const TopologicalMap& m, const std::string& from,
                                                   const std::string& to) {
  std::optional<std::vector<std::string>> best;
  std::vector<std::string> cur{from};
  std::function<void()> dfs = [&] {
    if (cur.back() == to) {
      if (!best || cur.size() < best->size() || (cur.size() == best->size() && cur < *best)) best = cur;
      return;
    }
    for (const auto& [a, b] : m.edges) {
      for (const auto& [u, v] : {std::pair{a, b}, std::pair{b, a}}) {
        if (u != cur.back() || std::find(cur.begin(), cur.end(), v) != cur.end()) continue;
        cur.push_back(v);
        dfs();
        cur.pop_back();
      }
    }
  };
  dfs();
  return best;
}

}  // namespace

TEST(World, RoomPathMatchesExhaustiveSearch) {
  std::mt19937_64 rng(11);
  for (int g = 0; g < 60; ++g) {
    TopologicalMap m;
    for (int i = 0; i < 8; ++i) m.nodes.push_back("n" + std::to_string(i));
    std::bernoulli_distribution edge(0.3);
    for (int i = 0; i < 8; ++i)
      for (int j = i + 1; j < 8; ++j)
        if (edge(rng)) m.edges.emplace_back(m.nodes[i], m.nodes[j]);
    for (const auto& a : m.nodes) {
      for (const auto& b : m.nodes) {
        const auto want = brute_path(m, a, b);
        if (!want) {
          EXPECT_THROW(room_path(m, a, b), NoPathError);
          continue;
        }
        EXPECT_EQ(room_path(m, a, b), *want) << a << "->" << b;
      }
    }
  }
}

TEST(World, DoorsBetween) {
  const auto plan = support::default_plan();
  ASSERT_EQ(doors_between(*plan, "bedroom", "living_kitchen").size(), 1u);
  EXPECT_EQ(doors_between(*plan, "bedroom", "living_kitchen")[0]->id, "door_living_bedroom");
  EXPECT_TRUE(doors_between(*plan, "bathroom", "living_kitchen").empty());
}

TEST(World, RgbParsing) {
  EXPECT_EQ(parse_rgb("#ff9f40"), (Rgb{255, 159, 64}));
  EXPECT_EQ(to_hex(Rgb{1, 2, 255}), "#0102ff");
  EXPECT_ANY_THROW(parse_rgb("ff9f40"));
}
