#pragma once

#include <optional>
#include <string>

namespace vlnpilot {

/// A navigation instruction plus its ground truth.
struct Query {
  std::string text;
  std::string target_room;
  std::optional<std::string> target_object;

  friend bool operator==(const Query&, const Query&) = default;
};

/// Thresholds for "close enough and properly oriented" to a target object.
struct SuccessCriteria {
  double reach_distance = 1.2;  // meters, horizontal
  double reach_bearing = 15.0;  // degrees
};

}  // namespace vlnpilot
