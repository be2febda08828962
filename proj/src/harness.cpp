#include "vlnpilot/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace vlnpilot {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void write_png(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void save_frames(const EpisodeConfig& config, const Observation& obs, int k) {
  std::filesystem::create_directories(config.save_frames);
  Frames frames;
  if (obs.frames) {
    frames = *obs.frames;
  } else {
    frames.front_png = render_frontal(*config.plan, obs.pose(), config.camera).png();
    frames.rear_png = render_rear(*config.plan, obs.pose(), config.camera).png();
  }
  const std::string stem = "step_" + config.episode + "_" + std::to_string(k) + "_";
  write_png(config.save_frames / (stem + "front.png"), frames.front_png);
  write_png(config.save_frames / (stem + "rear.png"), frames.rear_png);
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

}  // namespace

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "Success";
    case Outcome::FalseSuccess: return "FalseSuccess";
    case Outcome::Collision: return "Collision";
    case Outcome::MaxStepsExceeded: return "MaxStepsExceeded";
    case Outcome::ProtocolError: return "ProtocolError";
  }
  return "?";
}

SessionFactory local_sessions(std::shared_ptr<const FloorPlan> plan, SimConfig sim,
                              CameraModel camera) {
  return [plan = std::move(plan), sim, camera](bool frames) -> std::unique_ptr<SimSession> {
    return std::make_unique<Simulator>(plan, sim,
                                       frames ? make_frame_renderer(camera) : FrameRenderer{});
  };
}

void validate_config(const EpisodeConfig& c) {
  if (!c.plan) throw ConfigError("episode has no floor plan");
  if (trim(c.query.text).empty()) throw ConfigError("query text is empty");
  if (!c.plan->find_room(c.query.target_room))
    throw ConfigError("target room '" + c.query.target_room + "' does not exist");
  if (c.query.target_object) {
    const TargetObject* o = c.plan->find_object(*c.query.target_object);
    if (!o) throw ConfigError("target object '" + *c.query.target_object + "' does not exist");
    if (o->room != c.query.target_room)
      throw ConfigError("target object '" + o->id + "' is not in room '" + c.query.target_room + "'");
  }
  if (c.max_steps < 1) throw ConfigError("max_steps must be at least 1");
  try {
    c.camera.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (find_contact(*c.plan, c.sim.body, c.spawn)) throw ConfigError("spawn pose is in collision");
}

Query infer_query(const FloorPlan& plan, std::string_view text) {
  auto lower = [](std::string_view v) {
    std::string out(v);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  const std::string t = lower(text);
  Query q{std::string(text), {}, std::nullopt};
  for (const auto& o : plan.objects) {
    if (t.find(lower(o.label)) != std::string::npos || t.find(lower(o.id)) != std::string::npos) {
      if (q.target_object) throw ConfigError("query mentions more than one object");
      q.target_object = o.id;
      q.target_room = o.room;
    }
  }
  if (q.target_object) return q;
  for (const auto& r : plan.rooms) {
    std::vector<std::string> names = {lower(r.id)};
    std::string spaced = lower(r.id);
    std::replace(spaced.begin(), spaced.end(), '_', ' ');
    names.push_back(spaced);
    std::string label = lower(r.label);
    for (std::size_t start = 0; start <= label.size();) {
      const auto slash = label.find('/', start);
      const auto end = slash == std::string::npos ? label.size() : slash;
      if (end > start) names.push_back(trim(label.substr(start, end - start)));
      start = end + 1;
    }
    for (const auto& n : names) {
      if (n.empty() || t.find(n) == std::string::npos) continue;
      if (!q.target_room.empty() && q.target_room != r.id) throw ConfigError("query mentions more than one room");
      q.target_room = r.id;
    }
  }
  if (q.target_room.empty()) throw ConfigError("cannot tell which room the query refers to");
  return q;
}

bool check_success(const FloorPlan& plan, const DronePose& pose, const Query& query,
                   FsmState final_fsm_state, const SuccessCriteria& criteria,
                   const CameraModel& camera) {
  if (!is_pre_final(final_fsm_state)) return false;
  if (room_of(plan, pose.x, pose.z) != query.target_room) return false;
  if (!query.target_object) return true;
  const TargetObject* o = plan.find_object(*query.target_object);
  if (!o) return false;
  const double dist = (o->position - pose.ground()).norm();
  const double bearing = bearing_to(pose, camera, o->position);
  return dist <= criteria.reach_distance && std::abs(bearing) <= criteria.reach_bearing;
}

int count_oscillations(const std::vector<MotionCommand>& commands) {
  int flips = 0;
  char last = 0;
  for (MotionCommand m : commands) {
    if (!is_rotation(m)) continue;
    const char group = to_string(m).front();
    if (last && group != last) ++flips;
    last = group;
  }
  return flips;
}

EpisodeResult run_episode(const EpisodeConfig& config, Pilot& pilot, SimSession& session) {
  validate_config(config);
  const FloorPlan& plan = *config.plan;
  const TopologicalMap map = topological_map_of(plan);

  EpisodeResult res;
  res.episode = config.episode;
  res.spawn = config.spawn;
  res.final_pose = config.spawn;

  std::optional<TranscriptWriter> writer;
  if (!config.transcript.empty()) {
    writer.emplace(config.transcript);
    res.transcript_path = config.transcript.string();
    TranscriptHeader h;
    h.episode = config.episode;
    h.pilot = pilot.kind();
    h.plan = config.plan_path;
    h.spawn_id = config.spawn_id;
    h.spawn = config.spawn;
    h.query = config.query;
    h.max_steps = config.max_steps;
    h.criteria = config.criteria;
    h.rotation = config.sim.rotation;
    h.prompt_variant = config.prompt_variant;
    writer->write_header(h);
  }

  std::vector<MotionCommand> commands;
  auto finish = [&](Outcome o, std::string cause = {}) {
    res.outcome = o;
    res.cause = std::move(cause);
    res.oscillations = count_oscillations(commands);
    return res;
  };

  Observation obs;
  try {
    obs = session.reset(config.spawn);
  } catch (const StartInCollisionError& e) {
    throw ConfigError(e.what());
  } catch (const std::exception& e) {
    return finish(Outcome::ProtocolError, std::string("simulator: ") + e.what());
  }

  FsmState state = initial_state(config.query.text);
  FsmState previous = FsmState::Start;
  std::optional<MotionCommand> previous_move;
  res.final_state = state;

  for (int step = 0; step < config.max_steps; ++step) {
    const SemanticObservation semantic = semantic_observe(plan, obs.pose(), config.camera);
    const PilotContext ctx{plan,     map,           config.query,    obs,
                           semantic, state,         previous,        previous_move,
                           step,     config.camera, config.criteria, config.sim};
    Decision d;
    try {
      d = pilot.decide(ctx);
    } catch (const RetriesExhaustedError& e) {
      if (writer) writer->append(e.record());
      return finish(Outcome::ProtocolError, e.what());
    } catch (const std::exception& e) {
      return finish(Outcome::ProtocolError, std::string("pilot: ") + e.what());
    }

    d.record.step = step;
    d.record.state = state;
    std::vector<std::string> violations;
    for (const auto& v : validate(state, {d.response.movement, d.response.state}))
      violations.push_back(v.message);
    if (!violations.empty()) {
      d.record.violations = violations;
      if (writer) writer->append(d.record);
      return finish(Outcome::ProtocolError, join(violations));
    }
    if (writer) writer->append(d.record);
    if (!config.save_frames.empty()) save_frames(config, obs, step);

    const MotionCommand move = d.response.movement;
    StepResult sr;
    try {
      sr = session.step(move);
    } catch (const std::exception& e) {
      return finish(Outcome::ProtocolError, std::string("simulator: ") + e.what());
    }
    res.steps_used = step + 1;
    res.final_pose = sr.pose;
    commands.push_back(move);
    res.trajectory.push_back(
        {step, sr.pose, move, state, d.response.state, fnv1a_hex(serialize_response(d.response))});

    previous = state;
    previous_move = move;
    state = d.response.state;
    res.final_state = state;

    if (sr.collided)
      return finish(Outcome::Collision,
                    "contact with " + (sr.contact ? sr.contact->obstacle_id : std::string("geometry")));
    if (state == FsmState::Final) {
      const bool ok = check_success(plan, sr.pose, config.query, previous, config.criteria, config.camera);
      return finish(ok ? Outcome::Success : Outcome::FalseSuccess);
    }
    try {
      obs = session.observe();
    } catch (const std::exception& e) {
      return finish(Outcome::ProtocolError, std::string("simulator: ") + e.what());
    }
  }
  return finish(Outcome::MaxStepsExceeded);
}

EpisodeResult run_episode(const EpisodeConfig& config, Pilot& pilot, const SessionFactory& sessions) {
  validate_config(config);
  std::unique_ptr<SimSession> session;
  try {
    session = sessions(pilot.needs_frames());
  } catch (const std::exception& e) {
    EpisodeResult res;
    res.episode = config.episode;
    res.spawn = res.final_pose = config.spawn;
    res.outcome = Outcome::ProtocolError;
    res.cause = std::string("simulator: ") + e.what();
    return res;
  }
  return run_episode(config, pilot, *session);
}

Suite parse_suite(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("suite: ") + e.what());
  }
  try {
    Suite s;
    s.name = j.value("name", "suite");
    std::filesystem::path plan = j.at("plan").get<std::string>();
    s.plan = plan.is_relative() && !base_dir.empty() ? (base_dir / plan).lexically_normal() : plan;
    s.repetitions = j.value("repetitions", 5);
    s.max_steps = j.value("max_steps", 50);
    for (const auto& r : j.at("rows")) {
      SuiteRow row;
      row.spawn = r.at("spawn").get<std::string>();
      const json& q = r.at("query");
      row.query.text = q.at("text").get<std::string>();
      row.query.target_room = q.at("target_room").get<std::string>();
      if (q.contains("target_object") && !q.at("target_object").is_null())
        row.query.target_object = q.at("target_object").get<std::string>();
      s.rows.push_back(std::move(row));
    }
    if (s.repetitions < 0) throw ConfigError("suite: repetitions must be >= 0");
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("suite: ") + e.what());
  }
}

Suite load_suite(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open suite " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_suite(ss.str(), path.parent_path());
}

void add_outcome(ReportCell& cell, Outcome o) {
  ++cell.n;
  switch (o) {
    case Outcome::Success: ++cell.achieved; break;
    case Outcome::FalseSuccess: ++cell.false_success; break;
    case Outcome::Collision: ++cell.collisions; break;
    case Outcome::MaxStepsExceeded: ++cell.max_steps; break;
    case Outcome::ProtocolError: ++cell.protocol_errors; break;
  }
}

BenchmarkReport run_benchmark(const Suite& suite, std::shared_ptr<const FloorPlan> plan,
                              const std::string& pilot_name, const PilotFactory& pilots,
                              const SessionFactory& sessions, const BenchmarkOptions& options) {
  std::vector<EpisodeConfig> configs;
  std::vector<EpisodeSpec> specs;
  for (std::size_t i = 0; i < suite.rows.size(); ++i) {
    const SuiteRow& row = suite.rows[i];
    const SpawnPoint* sp = plan->find_spawn(row.spawn);
    if (!sp) throw ConfigError("suite row " + std::to_string(i) + ": unknown spawn '" + row.spawn + "'");
    for (int rep = 0; rep < suite.repetitions; ++rep) {
      EpisodeSpec spec{i, rep, "r" + std::to_string(i) + "_" + std::to_string(rep)};
      EpisodeConfig c;
      c.episode = spec.episode;
      c.plan = plan;
      c.plan_path = suite.plan.string();
      c.spawn_id = sp->id;
      c.spawn = {sp->x, sp->y, sp->z, sp->yaw};
      c.query = row.query;
      c.max_steps = suite.max_steps;
      c.criteria = options.criteria;
      c.camera = options.camera;
      c.sim = options.sim;
      if (!options.transcript_dir.empty()) c.transcript = options.transcript_dir / (spec.episode + ".jsonl");
      c.save_frames = options.save_frames;
      validate_config(c);
      configs.push_back(std::move(c));
      specs.push_back(std::move(spec));
    }
  }

  std::vector<EpisodeResult> results(configs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        auto pilot = pilots(specs[i]);
        results[i] = run_episode(configs[i], *pilot, sessions);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.parallelism)), configs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  BenchmarkReport report;
  report.pilots = {pilot_name};
  for (std::size_t i = 0; i < suite.rows.size(); ++i) {
    const SpawnPoint* sp = plan->find_spawn(suite.rows[i].spawn);
    const Room* room = plan->find_room(room_of(*plan, sp->x, sp->z));
    ReportRow row;
    row.starting_room = room ? room->label : std::string(kUnknownRoom);
    row.query = suite.rows[i].query.text;
    row.cells.resize(1);
    report.rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < results.size(); ++i) add_outcome(report.rows[specs[i].row].cells[0], results[i].outcome);
  report.episodes = std::move(results);
  return report;
}

BenchmarkReport merge_reports(const std::vector<BenchmarkReport>& reports) {
  BenchmarkReport out;
  for (const auto& r : reports) {
    if (out.rows.empty()) {
      out.rows = r.rows;
      for (auto& row : out.rows) row.cells.clear();
    }
    if (r.rows.size() != out.rows.size()) throw std::invalid_argument("reports cover different suites");
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      if (r.rows[i].starting_room != out.rows[i].starting_room || r.rows[i].query != out.rows[i].query)
        throw std::invalid_argument("reports cover different suites");
      out.rows[i].cells.insert(out.rows[i].cells.end(), r.rows[i].cells.begin(), r.rows[i].cells.end());
    }
    out.pilots.insert(out.pilots.end(), r.pilots.begin(), r.pilots.end());
    out.episodes.insert(out.episodes.end(), r.episodes.begin(), r.episodes.end());
  }
  return out;
}

}  // namespace vlnpilot
