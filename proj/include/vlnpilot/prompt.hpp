#pragma once

#include "vlnpilot/fsm.hpp"
#include "vlnpilot/sim.hpp"
#include "vlnpilot/world.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace vlnpilot {

enum class PromptVariant {
  Standard,
  /// Adds rules asking the pilot to get close to a doorway before aligning.
  CloseApproach,
};

std::string_view to_string(PromptVariant v);
std::optional<PromptVariant> parse_prompt_variant(std::string_view s);

struct PromptOptions {
  RotationConvention rotation = RotationConvention::BRotatesRight;
  PromptVariant variant = PromptVariant::Standard;
};

/// Everything sent to a vision-language pilot for one decision.
struct PromptBundle {
  std::string system_text;
  std::string state_text;
  std::string output_text;
  std::string user_query;
  std::string map_serialization;
  std::string current_state;
  std::string previous_state;
  std::string previous_movement;
  std::string frontal_image;  // base64 PNG

  /// System message: general instructions, state block, output contract.
  std::string instructions() const;
  /// User message text (the image travels as a separate part).
  std::string user_text() const;
  /// 64-bit FNV-1a over every field, hex.
  std::string digest() const;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// The state-specific instruction block, generated from spec_of(state).
std::string state_prompt(FsmState state, const PromptOptions& options = {});

PromptBundle build_prompt(std::string_view query, const TopologicalMap& map,
                          FsmState current_state, FsmState previous_state,
                          std::optional<MotionCommand> previous_movement,
                          std::string_view frontal_image_base64,
                          const PromptOptions& options = {});

std::string fnv1a_hex(std::string_view data);

}  // namespace vlnpilot
