#include "vlnpilot/transcript.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace vlnpilot {

namespace {

using nlohmann::json;

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

json pose_json(const DronePose& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}}; }

DronePose pose_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>(),
          j.at("yaw").get<double>()};
}

FsmState state_from(const json& j) {
  const auto s = parse_state(j.get<std::string>());
  if (!s) throw TranscriptError("unknown state " + j.get<std::string>());
  return *s;
}

TranscriptHeader header_from(const json& j) {
  TranscriptHeader h;
  h.episode = j.value("episode", "");
  h.pilot = j.at("pilot").get<std::string>();
  h.plan = j.value("plan", "");
  h.spawn_id = j.value("spawn_id", "");
  h.spawn = pose_from(j.at("spawn"));
  const json& q = j.at("query");
  h.query.text = q.at("text").get<std::string>();
  h.query.target_room = q.at("target_room").get<std::string>();
  if (q.contains("target_object") && !q.at("target_object").is_null())
    h.query.target_object = q.at("target_object").get<std::string>();
  h.max_steps = j.at("max_steps").get<int>();
  h.criteria.reach_distance = j.at("reach_distance").get<double>();
  h.criteria.reach_bearing = j.at("reach_bearing").get<double>();
  const auto rot = parse_rotation_convention(j.at("rotation").get<std::string>());
  if (!rot) throw TranscriptError("unknown rotation convention");
  h.rotation = *rot;
  h.prompt_variant = j.value("prompt_variant", "standard");
  return h;
}

TranscriptRecord record_from(const json& j) {
  TranscriptRecord r;
  r.step = j.at("step").get<int>();
  r.state = state_from(j.at("state"));
  r.prompt_digest = j.value("prompt_digest", "");
  r.raw = j.value("raw", "");
  if (j.contains("parsed") && !j.at("parsed").is_null()) r.parsed = parse_response(dump(j.at("parsed")));
  r.violations = j.value("violations", std::vector<std::string>{});
  r.latency_ms = j.value("latency_ms", 0.0);
  r.attempts = j.value("attempts", 1);
  return r;
}

}  // namespace

const TranscriptRecord* Transcript::at_step(int step) const {
  for (const auto& r : records)
    if (r.step == step) return &r;
  return nullptr;
}

std::string header_to_line(const TranscriptHeader& h) {
  json q = {{"text", h.query.text}, {"target_room", h.query.target_room}};
  q["target_object"] = h.query.target_object ? json(*h.query.target_object) : json(nullptr);
  json j = {{"kind", "header"},
            {"episode", h.episode},
            {"pilot", h.pilot},
            {"plan", h.plan},
            {"spawn_id", h.spawn_id},
            {"spawn", pose_json(h.spawn)},
            {"query", q},
            {"max_steps", h.max_steps},
            {"reach_distance", h.criteria.reach_distance},
            {"reach_bearing", h.criteria.reach_bearing},
            {"rotation", to_string(h.rotation)},
            {"prompt_variant", h.prompt_variant}};
  return dump(j);
}

std::string record_to_line(const TranscriptRecord& r) {
  json j = {{"kind", "step"},
            {"step", r.step},
            {"state", to_string(r.state)},
            {"prompt_digest", r.prompt_digest},
            {"raw", r.raw},
            {"parsed", r.parsed ? json::parse(serialize_response(*r.parsed)) : json(nullptr)},
            {"violations", r.violations},
            {"latency_ms", r.latency_ms},
            {"attempts", r.attempts}};
  return dump(j);
}

Transcript parse_transcript(std::string_view text) {
  Transcript t;
  bool have_header = false;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "header") {
        if (have_header) throw TranscriptError("duplicate header");
        t.header = header_from(j);
        have_header = true;
      } else if (kind == "step") {
        t.records.push_back(record_from(j));
      } else {
        throw TranscriptError("unknown record kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      throw TranscriptError("transcript line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (!have_header) throw TranscriptError("transcript has no header record");
  return t;
}

Transcript read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TranscriptError("cannot open transcript " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_transcript(ss.str());
}

TranscriptWriter::TranscriptWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw TranscriptError("cannot write transcript " + path.string());
}

void TranscriptWriter::write_header(const TranscriptHeader& h) { line(header_to_line(h)); }

void TranscriptWriter::append(const TranscriptRecord& r) { line(record_to_line(r)); }

void TranscriptWriter::line(const std::string& s) {
  out_ << s << '\n';
  out_.flush();
}

}  // namespace vlnpilot
