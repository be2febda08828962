// vlnpilot command-line front end.
#include "vlnpilot/harness.hpp"
#include "vlnpilot/simserve.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace vlnpilot;
using nlohmann::json;

namespace {

struct WorldOptions {
  std::string plan = VLNPILOT_DEFAULT_PLAN;
  std::string rotation = "b-right";
  double fov = 80.0;
  int width = 640;
  int height = 480;
  double radius = 0.12;
  double reach_distance = 1.2;
  double reach_bearing = 15.0;
  std::string sim = "local";

  void add(CLI::App* app, bool with_plan = true) {
    if (with_plan) app->add_option("--plan", plan, "Floor-plan file")->capture_default_str();
    app->add_option("--rotation", rotation, "Meaning of B commands: b-right or b-left")->capture_default_str();
    app->add_option("--fov", fov, "Horizontal field of view, degrees")->capture_default_str();
    app->add_option("--width", width, "Frame width, px")->capture_default_str();
    app->add_option("--height", height, "Frame height, px")->capture_default_str();
    app->add_option("--radius", radius, "Drone bounding radius, m")->capture_default_str();
    app->add_option("--reach-distance", reach_distance, "Object success radius, m")->capture_default_str();
    app->add_option("--reach-bearing", reach_bearing, "Object success bearing, degrees")->capture_default_str();
    app->add_option("--sim", sim, "local or remote:HOST:PORT")->capture_default_str();
  }

  SimConfig sim_config() const {
    SimConfig c;
    c.body.bounding_radius = radius;
    const auto r = parse_rotation_convention(rotation);
    if (!r) throw ConfigError("unknown rotation convention '" + rotation + "'");
    c.rotation = *r;
    return c;
  }
  CameraModel camera() const {
    CameraModel c;
    c.horizontal_fov = fov;
    c.width = width;
    c.height = height;
    return c;
  }
  SuccessCriteria criteria() const { return {reach_distance, reach_bearing}; }

  SessionFactory sessions(std::shared_ptr<const FloorPlan> p) const {
    if (sim == "local") return local_sessions(std::move(p), sim_config(), camera());
    if (sim.rfind("remote:", 0) == 0) return remote_sessions(parse_host_port(sim.substr(7)));
    throw ConfigError("--sim must be 'local' or 'remote:HOST:PORT'");
  }
};

struct PilotOptions {
  std::string pilot = "oracle";
  std::string model;
  std::string endpoint;
  double timeout = 60.0;
  int retries = 2;
  double temperature = 0.0;
  std::string variant = "standard";

  void add(CLI::App* app) {
    app->add_option("--model", model, "Model name for live pilots");
    app->add_option("--endpoint", endpoint, "Provider base URL for live pilots");
    app->add_option("--timeout", timeout, "Request timeout, s")->capture_default_str();
    app->add_option("--retries", retries, "Re-asks after an invalid answer")->capture_default_str();
    app->add_option("--temperature", temperature, "Sampling temperature")->capture_default_str();
    app->add_option("--prompt-variant", variant, "standard or close-approach")->capture_default_str();
  }

  PilotConfig config(const std::string& kind, const SimConfig& sim) const {
    PilotConfig c;
    const auto p = parse_provider(kind);
    if (!p) throw ConfigError("unknown pilot '" + kind + "'");
    c.provider = *p;
    c.model = model;
    c.endpoint = endpoint;
    c.timeout_seconds = timeout;
    c.max_retries = retries;
    c.temperature = temperature;
    const auto v = parse_prompt_variant(variant);
    if (!v) throw ConfigError("unknown prompt variant '" + variant + "'");
    c.prompt.variant = *v;
    c.prompt.rotation = sim.rotation;
    return c;
  }
};

DronePose parse_pose(const std::string& s) {
  std::stringstream ss(s);
  double v[4];
  std::string tok;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(ss, tok, ',')) throw ConfigError("pose must be x,y,z,yaw");
    try {
      v[i] = std::stod(tok);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + tok + "' in pose");
    }
  }
  if (std::getline(ss, tok, ',')) throw ConfigError("pose must be x,y,z,yaw");
  return {v[0], v[1], v[2], v[3]};
}

std::shared_ptr<const FloorPlan> load_plan(const std::string& path) {
  return std::make_shared<const FloorPlan>(load_floor_plan(path));
}

json pose_json(const DronePose& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}}; }

json summary(const EpisodeResult& r) {
  return {{"episode", r.episode},
          {"outcome", to_string(r.outcome)},
          {"steps_used", r.steps_used},
          {"final_pose", pose_json(r.final_pose)},
          {"final_state", to_string(r.final_state)},
          {"oscillations", r.oscillations},
          {"cause", r.cause},
          {"transcript", r.transcript_path}};
}

void write_file(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

int finish_episode(const EpisodeResult& r, const FloorPlan& plan, const std::string& plot) {
  if (!plot.empty()) write_file(plot, emit_trajectory_plot(r, plan));
  std::cout << summary(r).dump(2) << '\n';
  return r.outcome == Outcome::ProtocolError ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop drone navigation with a state-machine pilot"};
  app.require_subcommand(1);

  // run
  WorldOptions run_world;
  PilotOptions run_pilot;
  std::string run_spawn = "living_kitchen", run_query, run_room, run_object, run_transcript_in,
              run_transcript, run_plot, run_frames;
  int run_max_steps = 50;
  auto* run = app.add_subcommand("run", "Run one episode");
  run_world.add(run);
  run_pilot.add(run);
  run->add_option("--spawn", run_spawn, "Spawn id from the plan, or x,y,z,yaw")->capture_default_str();
  run->add_option("--query", run_query, "Navigation instruction")->required();
  run->add_option("--target-room", run_room, "Ground-truth room (inferred from the query if omitted)");
  run->add_option("--target-object", run_object, "Ground-truth object id");
  run->add_option("--pilot", run_pilot.pilot, "oracle, openai, gemini or replay")->capture_default_str();
  run->add_option("--replay-from", run_transcript_in, "Transcript to replay (with --pilot replay)");
  run->add_option("--max-steps", run_max_steps, "Step cap")->capture_default_str();
  run->add_option("--transcript", run_transcript, "Write the transcript here");
  run->add_option("--plot", run_plot, "Write a trajectory SVG here");
  run->add_option("--save-frames", run_frames, "Dump frontal and rear PNGs per step into this directory");

  // bench
  WorldOptions bench_world;
  PilotOptions bench_pilot;
  std::string bench_suite, bench_out = "-", bench_csv, bench_transcripts, bench_replay_dir, bench_frames;
  std::vector<std::string> bench_pilots;
  int bench_reps = -1, bench_parallel = 0;
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite and emit a report");
  bench_world.add(bench, false);
  bench_pilot.add(bench);
  bench->add_option("--suite", bench_suite, "Suite file")->required();
  bench->add_option("--reps", bench_reps, "Override the suite's repetitions");
  bench->add_option("--out", bench_out, "Markdown report path ('-' for stdout)")->capture_default_str();
  bench->add_option("--csv", bench_csv, "Also write a CSV report here");
  bench->add_option("--pilot", bench_pilots, "Pilot kind; repeat to compare pilots");
  bench->add_option("--parallel", bench_parallel, "Concurrent episodes (default 4 offline, 1 live)");
  bench->add_option("--transcripts", bench_transcripts, "Directory for per-episode transcripts");
  bench->add_option("--replay-dir", bench_replay_dir, "Transcripts to replay, named {episode}.jsonl");
  bench->add_option("--save-frames", bench_frames, "Dump frames for every episode");

  // replay
  WorldOptions replay_world;
  std::string replay_transcript, replay_plan, replay_plot, replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run an episode from a transcript");
  replay_world.add(replay, false);
  replay->add_option("--transcript", replay_transcript, "Transcript file")->required();
  replay->add_option("--plan", replay_plan, "Override the plan recorded in the transcript");
  replay->add_option("--plot", replay_plot, "Write a trajectory SVG here");
  replay->add_option("--out-transcript", replay_out, "Write the replayed transcript here");

  // render
  WorldOptions render_world;
  std::string render_pose, render_out = "front.png", render_rear_out;
  auto* render = app.add_subcommand("render", "Render the frontal view for a pose");
  render_world.add(render);
  render->add_option("--pose", render_pose, "x,y,z,yaw")->required();
  render->add_option("--out", render_out, "Frontal PNG")->capture_default_str();
  render->add_option("--rear", render_rear_out, "Also write the rear PNG here");

  // fsm dump
  auto* fsm = app.add_subcommand("fsm", "State-machine utilities");
  fsm->require_subcommand(1);
  auto* fsm_dump = fsm->add_subcommand("dump", "Print the transition table");

  // simserve
  WorldOptions serve_world;
  std::string serve_bind = "127.0.0.1:7007";
  auto* serve = app.add_subcommand("simserve", "Serve the simulator over TCP");
  serve_world.add(serve);
  serve->add_option("--bind", serve_bind, "HOST:PORT")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto plan = load_plan(run_world.plan);
      EpisodeConfig c;
      c.plan = plan;
      c.plan_path = run_world.plan;
      if (const SpawnPoint* sp = plan->find_spawn(run_spawn)) {
        c.spawn_id = sp->id;
        c.spawn = {sp->x, sp->y, sp->z, sp->yaw};
      } else {
        c.spawn = parse_pose(run_spawn);
      }
      if (run_room.empty()) {
        c.query = infer_query(*plan, run_query);
      } else {
        c.query = {run_query, run_room, std::nullopt};
        if (!run_object.empty()) c.query.target_object = run_object;
      }
      c.max_steps = run_max_steps;
      c.criteria = run_world.criteria();
      c.camera = run_world.camera();
      c.sim = run_world.sim_config();
      c.prompt_variant = run_pilot.variant;
      c.transcript = run_transcript;
      c.save_frames = run_frames;
      PilotConfig pc = run_pilot.config(run_pilot.pilot, c.sim);
      pc.transcript = run_transcript_in;
      auto pilot = make_pilot(pc);
      const EpisodeResult r = run_episode(c, *pilot, run_world.sessions(plan));
      return finish_episode(r, *plan, run_plot);
    }

    if (*bench) {
      Suite suite = load_suite(bench_suite);
      if (bench_reps >= 0) suite.repetitions = bench_reps;
      auto plan = load_plan(suite.plan.string());
      if (bench_pilots.empty()) bench_pilots.push_back("oracle");
      BenchmarkOptions opts;
      opts.criteria = bench_world.criteria();
      opts.camera = bench_world.camera();
      opts.sim = bench_world.sim_config();
      opts.save_frames = bench_frames;
      std::vector<BenchmarkReport> reports;
      for (const auto& kind : bench_pilots) {
        const PilotConfig pc = bench_pilot.config(kind, opts.sim);
        const bool live = pc.provider == Provider::OpenAICompatible || pc.provider == Provider::GeminiCompatible;
        opts.parallelism = bench_parallel > 0 ? bench_parallel : (live ? 1 : 4);
        if (!bench_transcripts.empty()) opts.transcript_dir = std::filesystem::path(bench_transcripts) / kind;
        PilotFactory factory = [&, pc](const EpisodeSpec& spec) {
          PilotConfig c = pc;
          if (c.provider == Provider::Replay) {
            if (bench_replay_dir.empty()) throw ConfigError("--pilot replay needs --replay-dir");
            c.transcript = std::filesystem::path(bench_replay_dir) / (spec.episode + ".jsonl");
          }
          return make_pilot(c);
        };
        reports.push_back(run_benchmark(suite, plan, kind, factory, bench_world.sessions(plan), opts));
      }
      const BenchmarkReport report = merge_reports(reports);
      write_file(bench_out, emit_report(report, ReportFormat::Markdown));
      if (!bench_csv.empty()) write_file(bench_csv, emit_report(report, ReportFormat::Csv));
      for (const auto& e : report.episodes)
        if (e.outcome == Outcome::ProtocolError) return 1;
      return 0;
    }

    if (*replay) {
      Transcript t = read_transcript(replay_transcript);
      const std::string plan_path = replay_plan.empty() ? t.header.plan : replay_plan;
      auto plan = load_plan(plan_path);
      EpisodeConfig c;
      c.episode = t.header.episode.empty() ? "replay" : t.header.episode;
      c.plan = plan;
      c.plan_path = plan_path;
      c.spawn_id = t.header.spawn_id;
      c.spawn = t.header.spawn;
      c.query = t.header.query;
      c.max_steps = t.header.max_steps;
      c.criteria = t.header.criteria;
      c.camera = replay_world.camera();
      c.sim = replay_world.sim_config();
      c.sim.rotation = t.header.rotation;
      c.prompt_variant = t.header.prompt_variant;
      c.transcript = replay_out;
      ReplayPilot pilot(std::move(t));
      const EpisodeResult r = run_episode(c, pilot, replay_world.sessions(plan));
      return finish_episode(r, *plan, replay_plot);
    }

    if (*render) {
      auto plan = load_plan(render_world.plan);
      const DronePose pose = parse_pose(render_pose);
      const CameraModel cam = render_world.camera();
      const auto front = render_frontal(*plan, pose, cam).png();
      write_file(render_out, std::string(front.begin(), front.end()));
      if (!render_rear_out.empty()) {
        const auto rear = render_rear(*plan, pose, cam).png();
        write_file(render_rear_out, std::string(rear.begin(), rear.end()));
      }
      return 0;
    }

    if (*fsm_dump) {
      std::cout << dump_table();
      return 0;
    }

    if (*serve) {
      auto plan = load_plan(serve_world.plan);
      SimServer server(plan, serve_world.sim_config(), serve_world.camera(), parse_host_port(serve_bind));
      std::cerr << "simserve listening on " << parse_host_port(serve_bind).host << ':' << server.port() << '\n';
      server.run();
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const PlanError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
