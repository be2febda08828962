#pragma once

#include "vlnpilot/fsm.hpp"
#include "vlnpilot/percept.hpp"
#include "vlnpilot/sim.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

namespace vlnpilot {

/// The five-field decision record a pilot returns each step.
struct PilotResponse {
  std::string room;
  MotionCommand movement = MotionCommand::E;
  FsmState state = FsmState::Final;
  std::string description;
  DoorPosition door_position = DoorPosition::NotVisible;

  friend bool operator==(const PilotResponse&, const PilotResponse&) = default;
};

class ResponseError : public std::runtime_error {
 public:
  enum class Kind { NoObjectFound, MissingField, UnknownMovement, UnknownState, UnknownDoorPosition };

  ResponseError(Kind kind, std::string detail);
  Kind kind() const { return kind_; }
  /// Offending field name or value.
  const std::string& detail() const { return detail_; }

 private:
  Kind kind_;
  std::string detail_;
};

std::string_view to_string(ResponseError::Kind k);

/// Extracts the first well-formed object from free text. Tolerates prose
/// around it, code fences, and single-quoted (Python-literal) objects.
PilotResponse parse_response(std::string_view raw);

/// Canonical JSON rendering; parse_response(serialize_response(r)) == r.
std::string serialize_response(const PilotResponse& r);

}  // namespace vlnpilot
