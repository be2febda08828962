#include "vlnpilot/fsm.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace vlnpilot {

namespace {

using M = MotionCommand;
using S = FsmState;

const std::vector<StateSpec>& table() {
  static const std::vector<StateSpec> rows = {
      {S::RecognizeRoom, "Identify the current room.",
       {M::A1, M::B1, M::B2, M::B3, M::C1, M::C2, M::C3},
       {S::StayOnRoom, S::SearchObject, S::SearchOpenDoor}},
      {S::StayOnRoom, "Remain stationary in the target room.", {M::E}, {S::Final}},
      {S::SearchObject, "Locate and center the target object.",
       {M::A1, M::A2, M::B1, M::B2, M::B3, M::C1, M::C2, M::C3},
       {S::SearchObject, S::ReachObject}},
      {S::ReachObject, "Approach and align with the object.",
       {M::A1, M::B1, M::C1, M::D1, M::D2, M::E},
       {S::DescribeObject, S::SearchObject, S::ReachObject}},
      {S::DescribeObject, "Stop and describe the object.", {M::E}, {S::Final}},
      {S::SearchOpenDoor, "Look for an open door to the goal.",
       {M::A1, M::B1, M::B2, M::B3, M::C1, M::C2, M::C3, M::E},
       {S::SearchOpenDoor, S::OrientTowardsDoor}},
      {S::OrientTowardsDoor, "Align with the open door.", {M::A1, M::B1, M::C1, M::D1, M::D2},
       {S::GoThroughDoor, S::SearchOpenDoor}},
      // The successor written as "position in center of room" is RecognizeRoom.
      {S::GoThroughDoor, "Enter the next room through the door.", {M::A1},
       {S::RecognizeRoom, S::OrientTowardsDoor}},
  };
  return rows;
}

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '_' || c == '-') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

struct Alias {
  std::string_view squashed;
  FsmState state;
};

constexpr Alias kAliases[] = {
    {"start", S::Start},
    {"recognizeroom", S::RecognizeRoom},
    {"positionincenterofroom", S::RecognizeRoom},
    {"searchopendoor", S::SearchOpenDoor},
    {"searchdoor", S::SearchOpenDoor},
    {"orienttowardsdoor", S::OrientTowardsDoor},
    {"orientedtowardsdoor", S::OrientTowardsDoor},
    {"orienttodoor", S::OrientTowardsDoor},
    {"gothroughdoor", S::GoThroughDoor},
    {"stayonroom", S::StayOnRoom},
    {"stayinroom", S::StayOnRoom},
    {"searchobject", S::SearchObject},
    {"reachobject", S::ReachObject},
    {"describeobject", S::DescribeObject},
    {"final", S::Final},
};

}  // namespace

std::string_view to_string(FsmState s) {
  switch (s) {
    case S::Start: return "Start";
    case S::RecognizeRoom: return "RecognizeRoom";
    case S::SearchOpenDoor: return "SearchOpenDoor";
    case S::OrientTowardsDoor: return "OrientTowardsDoor";
    case S::GoThroughDoor: return "GoThroughDoor";
    case S::StayOnRoom: return "StayOnRoom";
    case S::SearchObject: return "SearchObject";
    case S::ReachObject: return "ReachObject";
    case S::DescribeObject: return "DescribeObject";
    case S::Final: return "Final";
  }
  return "?";
}

std::string_view display_name(FsmState s) {
  switch (s) {
    case S::Start: return "Start";
    case S::RecognizeRoom: return "Recognize Room";
    case S::SearchOpenDoor: return "Search Open Door";
    case S::OrientTowardsDoor: return "Orient Towards Door";
    case S::GoThroughDoor: return "Go Through Door";
    case S::StayOnRoom: return "Stay On Room";
    case S::SearchObject: return "Search Object";
    case S::ReachObject: return "Reach Object";
    case S::DescribeObject: return "Describe Object";
    case S::Final: return "Final";
  }
  return "?";
}

std::optional<FsmState> parse_state(std::string_view name) {
  const std::string key = squash(name);
  for (const auto& a : kAliases)
    if (a.squashed == key) return a.state;
  return std::nullopt;
}

bool StateSpec::allows(MotionCommand m) const {
  return std::find(allowed_moves.begin(), allowed_moves.end(), m) != allowed_moves.end();
}

bool StateSpec::leads_to(FsmState s) const {
  return std::find(next_states.begin(), next_states.end(), s) != next_states.end();
}

const std::vector<StateSpec>& state_table() { return table(); }

const StateSpec& spec_of(FsmState state) {
  for (const auto& row : table())
    if (row.state == state) return row;
  throw NoSpecError("state " + std::string(to_string(state)) + " has no transition spec");
}

std::vector<Violation> validate(FsmState current, const TransitionDecision& decision) {
  const StateSpec& spec = spec_of(current);
  std::vector<Violation> out;
  if (!spec.allows(decision.movement))
    out.push_back({Violation::Rule::MoveNotAllowed,
                   "move " + std::string(to_string(decision.movement)) + " not allowed in " +
                       std::string(to_string(current))});
  if (!spec.leads_to(decision.next_state))
    out.push_back({Violation::Rule::NextStateUnreachable,
                   "next_state " + std::string(to_string(decision.next_state)) +
                       " not reachable from " + std::string(to_string(current))});
  return out;
}

FsmState initial_state(std::string_view /*query*/) { return S::RecognizeRoom; }

bool is_pre_final(FsmState s) { return s == S::StayOnRoom || s == S::DescribeObject; }

std::string dump_table() {
  std::ostringstream os;
  os << "state\tallowed_moves\tnext_states\tgoal\n";
  for (const auto& row : table()) {
    os << to_string(row.state) << '\t';
    for (std::size_t i = 0; i < row.allowed_moves.size(); ++i)
      os << (i ? "," : "") << to_string(row.allowed_moves[i]);
    os << '\t';
    for (std::size_t i = 0; i < row.next_states.size(); ++i)
      os << (i ? "," : "") << to_string(row.next_states[i]);
    os << '\t' << row.goal_text << '\n';
  }
  return os.str();
}

}  // namespace vlnpilot
