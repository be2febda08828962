#pragma once

#include "vlnpilot/fsm.hpp"
#include "vlnpilot/mission.hpp"
#include "vlnpilot/percept.hpp"
#include "vlnpilot/prompt.hpp"
#include "vlnpilot/response.hpp"
#include "vlnpilot/sim.hpp"
#include "vlnpilot/transcript.hpp"
#include "vlnpilot/world.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vlnpilot {

/// Everything a pilot may look at for one decision.
struct PilotContext {
  const FloorPlan& plan;
  const TopologicalMap& map;
  const Query& query;
  const Observation& observation;
  const SemanticObservation& semantic;
  FsmState current_state;
  FsmState previous_state;
  std::optional<MotionCommand> previous_move;
  int step;
  const CameraModel& camera;
  const SuccessCriteria& criteria;
  const SimConfig& sim;
};

struct Decision {
  PilotResponse response;
  TranscriptRecord record;
};

class PilotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeoutError : public PilotError {
 public:
  using PilotError::PilotError;
};

class TransportError : public PilotError {
 public:
  using PilotError::PilotError;
};

class HttpStatusError : public PilotError {
 public:
  HttpStatusError(int code, const std::string& body);
  int code() const { return code_; }

 private:
  int code_;
};

/// Every attempt failed parsing or validation. Carries the last attempt's record.
class RetriesExhaustedError : public PilotError {
 public:
  explicit RetriesExhaustedError(TranscriptRecord record);
  const TranscriptRecord& record() const { return record_; }

 private:
  TranscriptRecord record_;
};

class MissionImpossibleError : public PilotError {
 public:
  using PilotError::PilotError;
};

class StepOutOfRangeError : public PilotError {
 public:
  using PilotError::PilotError;
};

class Pilot {
 public:
  virtual ~Pilot() = default;
  virtual Decision decide(const PilotContext& ctx) = 0;
  /// "oracle", "replay", "openai", "gemini".
  virtual std::string kind() const = 0;
  /// Whether observations must carry rendered frames.
  virtual bool needs_frames() const { return false; }
};

enum class Provider { OpenAICompatible, GeminiCompatible, Oracle, Replay };

std::string_view to_string(Provider p);
/// Accepts "openai", "openai-compatible", "gemini", "gemini-compatible", "oracle", "replay".
std::optional<Provider> parse_provider(std::string_view s);

struct PilotConfig {
  Provider provider = Provider::Oracle;
  std::string model;
  /// Base URL, e.g. "https://api.openai.com". Empty selects the provider default.
  std::string endpoint;
  double timeout_seconds = 60.0;
  int max_retries = 2;
  double temperature = 0.0;
  PromptOptions prompt;
  /// Overrides the provider's environment variable when non-empty.
  std::string api_key;
  /// Replay source.
  std::filesystem::path transcript;
};

/// Sends one request per attempt and re-asks with the violation text appended.
class LivePilot final : public Pilot {
 public:
  /// Throws std::invalid_argument if no API key is available or retries < 0.
  explicit LivePilot(PilotConfig config);

  Decision decide(const PilotContext& ctx) override;
  std::string kind() const override;
  bool needs_frames() const override { return true; }

  /// One exchange with the provider; returns the model's text.
  std::string complete(const PromptBundle& bundle, const std::string& feedback);
  /// Parse, validate and retry for a prepared bundle.
  Decision decide_bundle(const PromptBundle& bundle, FsmState current, int step);

  const PilotConfig& config() const { return config_; }

 private:
  PilotConfig config_;
  std::string api_key_;
};

/// Ground-truth rule-based pilot. Only emits decisions that pass fsm validation.
class OraclePilot final : public Pilot {
 public:
  Decision decide(const PilotContext& ctx) override;
  std::string kind() const override { return "oracle"; }
};

/// Pure policy function behind OraclePilot. Throws MissionImpossibleError.
PilotResponse decide_oracle(const PilotContext& ctx);

/// Returns the stored responses of a transcript in order.
class ReplayPilot final : public Pilot {
 public:
  explicit ReplayPilot(Transcript transcript);
  explicit ReplayPilot(const std::filesystem::path& path);

  Decision decide(const PilotContext& ctx) override;
  std::string kind() const override { return "replay"; }
  const Transcript& transcript() const { return transcript_; }

 private:
  Transcript transcript_;
};

/// Throws StepOutOfRangeError when the transcript has no parsed response for `step`.
PilotResponse decide_replay(const Transcript& transcript, int step);

std::unique_ptr<Pilot> make_pilot(const PilotConfig& config);

}  // namespace vlnpilot
