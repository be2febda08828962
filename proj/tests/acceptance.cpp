#include "hand_fsm_table.hpp"
#include "support.hpp"

#include "vlnpilot/simserve.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unistd.h>
#include <string>

using namespace vlnpilot;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void run(int id, const std::string& name, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    v.pass = false;
    v.detail += " (over time budget)";
  }
  if (!v.pass) ++failures;
  std::printf("[%s] %d %s: %s [%.2f s / %.0f s]\n", v.pass ? "PASS" : "FAIL", id, name.c_str(),
              v.detail.c_str(), secs, budget_s);
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double wrap180(double d) { return std::remainder(d, 360.0); }

Verdict fsm_transcription() {
  int diffs = 0;
  const auto& table = state_table();
  if (table.size() != support::hand_table().size()) ++diffs;
  std::set<FsmState> seen;
  for (const auto& row : support::hand_table()) {
    const auto st = parse_state(row.name);
    if (!st) {
      ++diffs;
      continue;
    }
    seen.insert(*st);
    const StateSpec& spec = spec_of(*st);
    std::set<std::string> moves;
    for (MotionCommand m : spec.allowed_moves) moves.insert(std::string(to_string(m)));
    if (moves != row.moves || spec.allowed_moves.size() != row.moves.size()) ++diffs;
    std::set<FsmState> next;
    for (const auto& n : row.next) {
      const auto s = parse_state(n);
      if (s) next.insert(*s);
      else ++diffs;
    }
    if (next != std::set<FsmState>(spec.next_states.begin(), spec.next_states.end()) ||
        spec.next_states.size() != row.next.size())
      ++diffs;
  }
  if (seen.size() != 8) ++diffs;
  return {diffs == 0, std::to_string(diffs) + " differences over " + std::to_string(table.size()) + " states"};
}

Verdict motion_semantics() {
  const auto plan = support::default_plan();
  const SimConfig cfg;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> pick(0, kAllCommands.size() - 1);
  double worst = 0;
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const DronePose p = support::random_free_pose(*plan, rng, 0.55);
    const MotionCommand cmd = kAllCommands[pick(rng)];
    const StepResult r = apply_motion(*plan, cfg, p, cmd);
    if (r.collided) {
      ++bad;
      continue;
    }
    const std::string code(to_string(cmd));
    double forward = 0, left = 0, turn = 0;  // turn: counterclockwise degrees
    if (code == "A1") forward = 0.10;
    if (code == "A2") forward = 0.25;
    if (code == "A3") forward = 0.50;
    if (code == "D1") left = 0.10;
    if (code == "D2") left = -0.10;
    if (code == "B1") turn = -15;
    if (code == "B2") turn = -45;
    if (code == "B3") turn = -90;
    if (code == "C1") turn = 15;
    if (code == "C2") turn = 45;
    if (code == "C3") turn = 90;
    const double dx = r.pose.x - p.x, dz = r.pose.z - p.z;
    const double yaw = p.yaw * M_PI / 180;
    // Expected displacement expressed in the body frame.
    const double got_fwd = dx * std::cos(yaw) + dz * std::sin(yaw);
    const double got_left = -dx * std::sin(yaw) + dz * std::cos(yaw);
    double err = std::max({std::abs(got_fwd - forward), std::abs(got_left - left),
                           std::abs(wrap180(r.pose.yaw - p.yaw - turn)), std::abs(r.pose.y - p.y)});
    if (turn != 0 && (r.pose.x != p.x || r.pose.z != p.z)) ++bad;
    if (code == "E" && !(r.pose == p)) ++bad;
    worst = std::max(worst, err);
  }
  const bool ok = bad == 0 && worst < 1e-9;
  std::ostringstream s;
  s << "10000 pairs, max error " << worst << ", " << bad << " violations";
  return {ok, s.str()};
}

Verdict collision_soundness() {
  const auto plan = support::default_plan();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const DroneBody body;

  // Ram walls with forward or lateral motion. Each script enters a state that
  // keeps allowing the chosen translation.
  using S = support::ScriptedPilot::Step;
  int non_collision = 0;
  double worst_pen = 0;
  for (int i = 0; i < 1000; ++i) {
    DronePose spawn = support::random_free_pose(*plan, rng, 0.05);
    const auto& w = plan->walls[rng() % plan->walls.size()];
    const Vec2 aim = w.segment.a + unit(rng) * (w.segment.b - w.segment.a);
    const Vec2 d = aim - spawn.ground();
    const double dir = std::atan2(d.y(), d.x()) * 180 / M_PI;
    std::vector<S> script;
    switch (i % 4) {
      case 0:
        spawn.yaw = dir;
        script = {{MotionCommand::A1, FsmState::SearchOpenDoor}};
        break;
      case 1:
        spawn.yaw = dir;
        script = {{MotionCommand::A1, FsmState::SearchObject}, {MotionCommand::A2, FsmState::SearchObject}};
        break;
      case 2:
        spawn.yaw = dir - 90;
        script = {{MotionCommand::B3, FsmState::SearchObject},
                  {MotionCommand::C3, FsmState::ReachObject},
                  {MotionCommand::D1, FsmState::ReachObject}};
        break;
      default:
        spawn.yaw = dir + 90;
        script = {{MotionCommand::B3, FsmState::SearchObject},
                  {MotionCommand::C3, FsmState::ReachObject},
                  {MotionCommand::D2, FsmState::ReachObject}};
        break;
    }
    spawn.yaw = std::fmod(spawn.yaw + 720.0, 360.0);
    support::ScriptedPilot pilot(script);
    const auto cfg = support::episode_config(plan, spawn, {"Go to the bedroom", "bedroom", std::nullopt}, 2000);
    const auto res = run_episode(cfg, pilot, local_sessions(plan, {}, {}));
    if (res.outcome != Outcome::Collision) {
      ++non_collision;
      continue;
    }
    const auto n = nearest_solid(*plan, body, res.final_pose);
    if (n) worst_pen = std::max(worst_pen, body.bounding_radius - n->distance);
  }

  // Oversized discs in front of the living-room door.
  const Door* door = nullptr;
  for (const auto& dd : plan->doors)
    if (doors_between(*plan, "living_kitchen", "bedroom").front()->id == dd.id) door = &dd;
  const Vec2 mid = door->opening.midpoint();
  int crossings = 0, attempts = 0;
  std::uniform_real_distribution<double> radius(door->width / 2, 0.6);
  while (attempts < 100) {
    SimConfig sim;
    sim.body.bounding_radius = radius(rng);
    const DronePose spawn{mid.x() - 0.1 - sim.body.bounding_radius - 1.5 * unit(rng), 1.0,
                          mid.y() + (unit(rng) - 0.5) * 0.8, 0.0};
    const auto ns = nearest_solid(*plan, sim.body, spawn);
    if (!ns || ns->distance <= sim.body.bounding_radius + 0.01) continue;
    ++attempts;
    DronePose start = spawn;
    const Vec2 target = mid + Vec2(0.0, (unit(rng) - 0.5) * door->width);
    const Vec2 d = target - spawn.ground();
    start.yaw = std::fmod(std::atan2(d.y(), d.x()) * 180 / M_PI + 360.0, 360.0);
    auto cfg = support::episode_config(plan, start, {"Go to the bedroom", "bedroom", std::nullopt}, 200);
    cfg.sim = sim;
    std::unique_ptr<Pilot> pilot;
    if (attempts % 2)
      pilot = std::make_unique<OraclePilot>();
    else
      pilot = std::make_unique<support::ScriptedPilot>(
          std::vector<S>{{MotionCommand::A1, FsmState::SearchOpenDoor}});
    const auto res = run_episode(cfg, *pilot, local_sessions(plan, sim, {}));
    bool crossed = res.outcome == Outcome::Success;
    for (const auto& t : res.trajectory)
      if (room_of(*plan, t.pose.x, t.pose.z) != "living_kitchen") crossed = true;
    crossings += crossed;
  }

  std::ostringstream s;
  s << "1000 wall rams, " << non_collision << " without Collision, max penetration " << worst_pen
    << " m; oversized disc crossed " << crossings << "/100";
  return {non_collision == 0 && worst_pen <= 0.02 && crossings == 0, s.str()};
}

Verdict oracle_benchmark() {
  const Suite suite = load_suite(support::benchmark_suite_path());
  const auto plan = std::make_shared<const FloorPlan>(load_floor_plan(suite.plan));
  const auto report = run_benchmark(
      suite, plan, "oracle", [](const EpisodeSpec&) { return std::make_unique<OraclePilot>(); },
      local_sessions(plan, {}, {}));
  int bad_rows = 0, long_eps = 0, max_used = 0;
  for (const auto& row : report.rows) {
    const ReportCell& c = row.cells.at(0);
    if (c.n != 5 || c.achieved != 5 || c.collisions || c.max_steps || c.false_success || c.protocol_errors)
      ++bad_rows;
  }
  for (const auto& e : report.episodes) {
    max_used = std::max(max_used, e.steps_used);
    if (e.steps_used > 50) ++long_eps;
  }
  const bool ok = report.rows.size() == 10 && bad_rows == 0 && long_eps == 0 && report.episodes.size() == 50;
  std::ostringstream s;
  s << report.rows.size() << " rows x 5, " << bad_rows << " rows short of 5/5, longest episode " << max_used
    << " steps";
  return {ok, s.str()};
}

Verdict prompt_round_trip() {
  const std::string sample =
      "{'room': 'bedroom', 'movement': 'E', 'state': 'Final', 'description': 'A large mirror is visible on "
      "the right side of the image, reflecting light. It is positioned near a window and next to a wardrobe. "
      "The mirror is mostly in frame and upright.', 'door_position': 'not_visible'}";
  PilotResponse want;
  want.room = "bedroom";
  want.movement = MotionCommand::E;
  want.state = FsmState::Final;
  want.description =
      "A large mirror is visible on the right side of the image, reflecting light. It is positioned near a "
      "window and next to a wardrobe. The mirror is mostly in frame and upright.";
  want.door_position = DoorPosition::NotVisible;
  if (!(parse_response(sample) == want)) return {false, "sample text did not parse to the expected record"};

  std::mt19937_64 rng(303);
  const std::vector<std::string> fields = {"room", "movement", "state", "description", "door_position"};
  const std::vector<std::string> bad_moves = {"A4", "F1", "", "forward", "A 1", "E2", "B0"};
  const std::vector<std::string> states = {"Search Object", "Reach Object", "Final", "Go Through Door",
                                           "Oriented Towards Door", "Recognize Room"};
  const std::vector<std::string> bad_states = {"Fly Away", "", "Search", "Done"};
  const std::vector<std::string> doors = {"left", "center", "right", "not_visible"};
  const std::vector<std::string> bad_doors = {"middle", "", "up", "behind"};

  auto literal = [](const std::map<std::string, std::string>& kv, const std::vector<std::string>& order) {
    std::string s = "{";
    for (const auto& k : order) {
      if (!kv.count(k)) continue;
      if (s.size() > 1) s += ", ";
      s += "'" + k + "': '" + kv.at(k) + "'";
    }
    return s + "}";
  };

  int wrong = 0;
  for (int i = 0; i < 1000; ++i) {
    std::map<std::string, std::string> kv = {{"room", "bedroom"},
                                             {"movement", "E"},
                                             {"state", "Final"},
                                             {"description", "A mirror."},
                                             {"door_position", "not_visible"}};
    PilotResponse expect;
    expect.room = "bedroom";
    expect.movement = MotionCommand::E;
    expect.state = FsmState::Final;
    expect.description = "A mirror.";
    expect.door_position = DoorPosition::NotVisible;
    std::optional<ResponseError::Kind> err;
    std::string detail;
    std::string text;

    switch (i % 6) {
      case 0: {
        const std::string& f = fields[rng() % fields.size()];
        kv.erase(f);
        err = ResponseError::Kind::MissingField;
        detail = f;
        break;
      }
      case 1:
        if (rng() % 2) {
          const MotionCommand m = kAllCommands[rng() % kAllCommands.size()];
          kv["movement"] = std::string(to_string(m));
          expect.movement = m;
        } else {
          kv["movement"] = bad_moves[rng() % bad_moves.size()];
          err = ResponseError::Kind::UnknownMovement;
        }
        break;
      case 2:
        if (rng() % 2) {
          kv["state"] = states[rng() % states.size()];
          expect.state = *parse_state(kv["state"]);
        } else {
          kv["state"] = bad_states[rng() % bad_states.size()];
          err = ResponseError::Kind::UnknownState;
        }
        break;
      case 3:
        if (rng() % 2) {
          kv["door_position"] = doors[rng() % doors.size()];
          expect.door_position = *parse_door_position(kv["door_position"]);
        } else {
          kv["door_position"] = bad_doors[rng() % bad_doors.size()];
          err = ResponseError::Kind::UnknownDoorPosition;
        }
        break;
      default:
        break;
    }
    std::vector<std::string> order = fields;
    std::shuffle(order.begin(), order.end(), rng);
    text = literal(kv, order);
    if (i % 6 == 4) {
      switch (rng() % 3) {
        case 0: text = "```json\n" + text + "\n```"; break;
        case 1: text = "Here is my answer:\n" + text + "\nLet me know."; break;
        default: text = "```\n" + text + "\n```\nThat is all."; break;
      }
    }
    if (i % 6 == 5) {
      text = text.substr(0, rng() % (text.size() - 1));
      err = ResponseError::Kind::NoObjectFound;
    }

    try {
      const PilotResponse got = parse_response(text);
      if (err || !(got == expect)) ++wrong;
    } catch (const ResponseError& e) {
      if (!err || e.kind() != *err || (!detail.empty() && e.detail() != detail)) ++wrong;
    } catch (...) {
      ++wrong;
    }
  }
  return {wrong == 0, "sample parsed exactly; " + std::to_string(wrong) + "/1000 fuzz cases mishandled"};
}

Verdict renderer_consistency() {
  const auto plan = support::default_plan();
  const CameraModel cam;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> jitter(-35.0, 35.0);
  int compared = 0, bad = 0;
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    DronePose p = support::random_free_pose(*plan, rng, 0.0);
    const TargetObject& aim = plan->objects[rng() % plan->objects.size()];
    const Vec2 d = aim.position - p.ground();
    p.yaw = std::fmod(std::atan2(d.y(), d.x()) * 180 / M_PI + jitter(rng) + 720.0, 360.0);
    const auto sem = semantic_observe(*plan, p, cam);
    std::optional<RenderedImage> img;
    for (const auto& v : sem.visible_objects) {
      if (v.occluded_fraction > 0 || std::abs(v.bearing) + v.angular_width / 2 > cam.horizontal_fov / 2) continue;
      if (!img) img = render_frontal(*plan, p, cam);
      const auto b = support::rendered_bearing(*img, plan->find_object(v.id)->color, cam);
      ++compared;
      if (!b) {
        ++bad;
        continue;
      }
      worst = std::max(worst, std::abs(*b - v.bearing));
      if (std::abs(*b - v.bearing) > 0.5) ++bad;
    }
  }

  int sweep_bad = 0;
  for (double fov : {60.0, 80.0, 100.0}) {
    CameraModel c;
    c.horizontal_fov = fov;
    const double t = std::tan(fov / 2 * M_PI / 180);
    const double edge = std::atan(0.10 * t) * 180 / M_PI;
    for (double b : {edge - 1e-6, edge + 1e-6, -edge + 1e-6, -edge - 1e-6}) {
      const DoorPosition want = std::abs(b) < edge ? DoorPosition::Center
                                : b < 0            ? DoorPosition::Left
                                                   : DoorPosition::Right;
      if (classify_door_position(b, c) != want) ++sweep_bad;
    }
    for (double b = -fov / 2; b <= fov / 2; b += 0.005) {
      const double u = std::tan(b * M_PI / 180) / t;
      if (std::abs(std::abs(u) - 0.10) < 1e-9) continue;
      const DoorPosition want = std::abs(u) <= 0.10 ? DoorPosition::Center
                                : b < 0             ? DoorPosition::Left
                                                    : DoorPosition::Right;
      if (classify_door_position(b, c) != want) ++sweep_bad;
    }
  }

  std::ostringstream s;
  s << compared << " unoccluded targets over 500 poses, max centroid error " << worst << " deg, " << bad
    << " over 0.5 deg; boundary sweep mismatches " << sweep_bad;
  return {compared > 100 && bad == 0 && sweep_bad == 0, s.str()};
}

Verdict wire_transparency() {
  const Suite suite = load_suite(support::benchmark_suite_path());
  const auto plan = std::make_shared<const FloorPlan>(load_floor_plan(suite.plan));
  const PilotFactory oracle = [](const EpisodeSpec&) { return std::make_unique<OraclePilot>(); };
  const auto local = run_benchmark(suite, plan, "oracle", oracle, local_sessions(plan, {}, {}));
  SimServer server(plan, {}, {}, {"127.0.0.1", 0});
  server.start();
  const auto remote = run_benchmark(suite, plan, "oracle", oracle, remote_sessions({"127.0.0.1", server.port()}));
  server.stop();
  const bool md = emit_report(local, ReportFormat::Markdown) == emit_report(remote, ReportFormat::Markdown);
  const bool csv = emit_report(local, ReportFormat::Csv) == emit_report(remote, ReportFormat::Csv);
  const bool eps = local.episodes == remote.episodes;
  std::ostringstream s;
  s << "markdown " << (md ? "identical" : "differs") << ", csv " << (csv ? "identical" : "differs") << ", "
    << local.episodes.size() << " episodes " << (eps ? "identical" : "differ");
  return {md && csv && eps, s.str()};
}

Verdict report_format() {
  BenchmarkReport r;
  r.pilots = {"gpt"};
  ReportCell a{5, 2, 0, 3, 0, 0}, b{5, 5, 0, 0, 0, 0}, c{5, 1, 1, 1, 1, 1};
  r.rows = {{"living room/kitchen", "Go to the bedroom", {a}},
            {"living room/kitchen", "Find the refrigerator", {b}},
            {"bedroom", "Go to the bathroom, please", {c}}};
  const fs::path dir = fs::path(VLNPILOT_TEST_DIR) / "golden";
  const bool md = emit_report(r, ReportFormat::Markdown) == slurp(dir / "report_synthetic.md");
  const bool csv = emit_report(r, ReportFormat::Csv) == slurp(dir / "report_synthetic.csv");
  return {md && csv, std::string("markdown ") + (md ? "matches" : "differs") + ", csv " +
                         (csv ? "matches" : "differs")};
}

Verdict replay_determinism() {
  const auto plan = support::default_plan();
  const fs::path dir = fs::temp_directory_path() / ("vlnpilot_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto cfg = support::episode_config(plan, support::spawn_pose(*plan, "living_kitchen"),
                                     {"Go to the bathroom", "bathroom", std::nullopt});
  cfg.transcript = dir / "oracle.jsonl";
  OraclePilot oracle;
  const auto original = run_episode(cfg, oracle, local_sessions(plan, {}, {}));
  cfg.transcript.clear();
  ReplayPilot r1(dir / "oracle.jsonl"), r2(dir / "oracle.jsonl");
  const auto a = run_episode(cfg, r1, local_sessions(plan, {}, {}));
  const auto b = run_episode(cfg, r2, local_sessions(plan, {}, {}));
  fs::remove_all(dir);
  const bool same = a == b;
  const bool plots = emit_trajectory_plot(a, *plan) == emit_trajectory_plot(b, *plan);
  const bool matches_original = a.trajectory == original.trajectory && a.outcome == original.outcome;
  std::ostringstream s;
  s << "replayed " << a.steps_used << "-step " << to_string(a.outcome) << " episode twice: results "
    << (same ? "identical" : "differ") << ", plots " << (plots ? "identical" : "differ") << ", original "
    << (matches_original ? "reproduced" : "not reproduced");
  return {same && plots && matches_original && a.outcome == Outcome::Success, s.str()};
}

}  // namespace

int main() {
  run(1, "FSM transcription", 1, fsm_transcription);
  run(2, "Motion semantics", 5, motion_semantics);
  run(3, "Collision soundness", 30, collision_soundness);
  run(4, "Oracle benchmark", 60, oracle_benchmark);
  run(5, "Prompt/parse round trip", 10, prompt_round_trip);
  run(6, "Renderer-geometry consistency", 60, renderer_consistency);
  run(7, "Wire transparency", 90, wire_transparency);
  run(8, "Report format", 1, report_format);
  run(9, "Replay determinism", 10, replay_determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
