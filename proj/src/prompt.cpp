#include "vlnpilot/prompt.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <sstream>

namespace vlnpilot {

namespace assets {
extern const std::string_view system_txt;
extern const std::string_view output_txt;
extern const std::string_view states_json;
}  // namespace assets

namespace {

using nlohmann::json;

const json& state_assets() {
  static const json doc = json::parse(assets::states_json);
  return doc.at("states");
}

/// Drops the single trailing newline text files end with.
std::string trimmed(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::string command_line(MotionCommand m) {
  std::ostringstream os;
  os << "- `" << to_string(m) << "`: ";
  const double v = magnitude(m);
  if (is_forward(m)) os << "move forward " << static_cast<int>(v * 100 + 0.5) << " cm";
  else if (m == MotionCommand::D1) os << "move left " << static_cast<int>(v * 100 + 0.5) << " cm";
  else if (m == MotionCommand::D2) os << "move right " << static_cast<int>(v * 100 + 0.5) << " cm";
  else if (is_rotation(m)) os << "rotate " << static_cast<int>(v) << "°";
  else os << "no movement (hover in place)";
  return os.str();
}

}  // namespace

std::string_view to_string(PromptVariant v) {
  return v == PromptVariant::Standard ? "standard" : "close-approach";
}

std::optional<PromptVariant> parse_prompt_variant(std::string_view s) {
  if (s == "standard") return PromptVariant::Standard;
  if (s == "close-approach") return PromptVariant::CloseApproach;
  return std::nullopt;
}

std::string state_prompt(FsmState state, const PromptOptions& options) {
  const StateSpec& spec = spec_of(state);
  const json& a = state_assets().at(std::string(to_string(state)));

  std::ostringstream os;
  os << "## State: **" << display_name(state) << "**\n\n---\n\n";
  os << "## GOAL\n" << a.at("goal").get<std::string>() << "\n(" << spec.goal_text << ")\n\n---\n\n";

  os << "## POLICY RULES\n\n";
  for (const auto& r : a.at("rules")) os << "- " << r.get<std::string>() << "\n";
  if (options.variant == PromptVariant::CloseApproach && a.contains("close_approach_rules"))
    for (const auto& r : a.at("close_approach_rules")) os << "- " << r.get<std::string>() << "\n";
  os << "\n---\n\n";

  os << "## MOVEMENT COMMANDS\n\nOnly return **ONE** movement command from the list below:\n";
  const bool b_right = options.rotation == RotationConvention::BRotatesRight;
  struct Group {
    char letter;
    std::string title;
  };
  const Group groups[] = {{'A', "Forward movement"},
                          {'B', b_right ? "Right rotation" : "Left rotation"},
                          {'C', b_right ? "Left rotation" : "Right rotation"},
                          {'D', "Lateral movement"},
                          {'E', "No movement"}};
  for (const auto& g : groups) {
    bool header = false;
    for (MotionCommand m : spec.allowed_moves) {
      if (to_string(m).front() != g.letter) continue;
      if (!header) {
        os << "\n### " << g.letter << ". " << g.title << ":\n";
        header = true;
      }
      os << command_line(m) << "\n";
    }
  }
  os << "\n---\n\n";

  os << "## OUTPUT STATE RULES\n\nChoose the next FSM state based on what the robot sees:\n\n";
  const json& transitions = a.at("transitions");
  for (FsmState next : spec.next_states) {
    os << "- `" << display_name(next) << "`";
    auto it = transitions.find(std::string(to_string(next)));
    if (it != transitions.end()) os << ": " << it->get<std::string>();
    os << "\n";
  }

  const json& notes = a.at("notes");
  if (!notes.empty()) {
    os << "\n---\n\n## NOTES\n\n";
    for (const auto& n : notes) os << "- " << n.get<std::string>() << "\n";
  }
  return os.str();
}

std::string PromptBundle::instructions() const {
  return system_text + "\n\n" + state_text + "\n" + output_text;
}

std::string PromptBundle::user_text() const {
  std::ostringstream os;
  os << "## User query\n" << user_query << "\n\n"
     << "## Topological map\n" << map_serialization << "\n\n"
     << "## Current FSM state\n" << current_state << "\n\n"
     << "## Previous FSM state\n" << previous_state << "\n\n"
     << "## Previous movement\n" << previous_movement << "\n\n"
     << "The robot's current camera view is attached as a base64-encoded PNG image.";
  return os.str();
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 15];
  return out;
}

std::string PromptBundle::digest() const {
  std::string all;
  for (const std::string* f : {&system_text, &state_text, &output_text, &user_query,
                               &map_serialization, &current_state, &previous_state,
                               &previous_movement, &frontal_image}) {
    all += *f;
    all += '\x1f';
  }
  return fnv1a_hex(all);
}

PromptBundle build_prompt(std::string_view query, const TopologicalMap& map,
                          FsmState current_state, FsmState previous_state,
                          std::optional<MotionCommand> previous_movement,
                          std::string_view frontal_image_base64, const PromptOptions& options) {
  PromptBundle b;
  b.system_text = trimmed(assets::system_txt);
  b.state_text = state_prompt(current_state, options);
  b.output_text = trimmed(assets::output_txt);
  b.user_query = std::string(query);
  b.map_serialization = serialize_map(map);
  b.current_state = std::string(display_name(current_state));
  b.previous_state = std::string(display_name(previous_state));
  b.previous_movement = previous_movement ? std::string(to_string(*previous_movement)) : "none";
  b.frontal_image = std::string(frontal_image_base64);
  return b;
}

}  // namespace vlnpilot
