#pragma once

#include "vlnpilot/sim.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vlnpilot {

enum class FsmState {
  Start,
  RecognizeRoom,
  SearchOpenDoor,
  OrientTowardsDoor,
  GoThroughDoor,
  StayOnRoom,
  SearchObject,
  ReachObject,
  DescribeObject,
  Final,
};

inline constexpr std::array<FsmState, 10> kAllStates = {
    FsmState::Start,        FsmState::RecognizeRoom, FsmState::SearchOpenDoor,
    FsmState::OrientTowardsDoor, FsmState::GoThroughDoor, FsmState::StayOnRoom,
    FsmState::SearchObject, FsmState::ReachObject,   FsmState::DescribeObject,
    FsmState::Final};

/// CamelCase identifier, e.g. "SearchOpenDoor".
std::string_view to_string(FsmState s);
/// Human-readable name used in prompts, e.g. "Search Open Door".
std::string_view display_name(FsmState s);

/// Matches after dropping whitespace, underscores, hyphens and case, and
/// accepts the alternative spellings found in hand-written prompts
/// ("Oriented Towards Door", "Position in Center of Room").
std::optional<FsmState> parse_state(std::string_view name);

struct StateSpec {
  FsmState state;
  std::string_view goal_text;
  std::vector<MotionCommand> allowed_moves;
  std::vector<FsmState> next_states;

  bool allows(MotionCommand m) const;
  bool leads_to(FsmState s) const;
};

class NoSpecError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The transition table row for `state`. Throws NoSpecError for Final.
const StateSpec& spec_of(FsmState state);

/// Every state that has a row, in table order.
const std::vector<StateSpec>& state_table();

struct TransitionDecision {
  MotionCommand movement;
  FsmState next_state;
};

struct Violation {
  enum class Rule { MoveNotAllowed, NextStateUnreachable };
  Rule rule;
  std::string message;
};

/// Empty when both the move and the successor are permitted by `current`.
std::vector<Violation> validate(FsmState current, const TransitionDecision& decision);

/// Start is an administrative state: every episode begins recognizing its room.
FsmState initial_state(std::string_view query);

/// States whose only successor is Final.
bool is_pre_final(FsmState s);

/// Stable tabular dump of the table (used by `vlnpilot fsm dump`).
std::string dump_table();

}  // namespace vlnpilot
