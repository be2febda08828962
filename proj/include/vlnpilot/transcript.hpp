#pragma once

#include "vlnpilot/fsm.hpp"
#include "vlnpilot/mission.hpp"
#include "vlnpilot/response.hpp"
#include "vlnpilot/sim.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace vlnpilot {

/// First line of every transcript file.
struct TranscriptHeader {
  std::string episode;
  std::string pilot;
  std::string plan;  // path as given to the harness
  std::string spawn_id;
  DronePose spawn;
  Query query;
  int max_steps = 50;
  SuccessCriteria criteria;
  RotationConvention rotation = RotationConvention::BRotatesRight;
  std::string prompt_variant = "standard";

  friend bool operator==(const TranscriptHeader& a, const TranscriptHeader& b) {
    return a.episode == b.episode && a.pilot == b.pilot && a.plan == b.plan &&
           a.spawn_id == b.spawn_id && a.spawn == b.spawn && a.query == b.query &&
           a.max_steps == b.max_steps && a.criteria.reach_distance == b.criteria.reach_distance &&
           a.criteria.reach_bearing == b.criteria.reach_bearing && a.rotation == b.rotation &&
           a.prompt_variant == b.prompt_variant;
  }
};

/// One pilot decision, including failed attempts' diagnostics.
struct TranscriptRecord {
  int step = 0;
  /// State the decision was requested under.
  FsmState state = FsmState::RecognizeRoom;
  std::string prompt_digest;
  std::string raw;
  std::optional<PilotResponse> parsed;
  /// Empty when the accepted response validated cleanly.
  std::vector<std::string> violations;
  double latency_ms = 0.0;
  int attempts = 1;

  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

struct Transcript {
  TranscriptHeader header;
  std::vector<TranscriptRecord> records;

  /// Record whose step field equals `step`, or nullptr.
  const TranscriptRecord* at_step(int step) const;
};

std::string header_to_line(const TranscriptHeader& h);
std::string record_to_line(const TranscriptRecord& r);

class TranscriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws TranscriptError with the offending line number.
Transcript parse_transcript(std::string_view text);
Transcript read_transcript(const std::filesystem::path& path);

/// Append-only writer: every line is flushed as soon as it is written.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(const std::filesystem::path& path);
  void write_header(const TranscriptHeader& h);
  void append(const TranscriptRecord& r);
  const std::filesystem::path& path() const { return path_; }

 private:
  void line(const std::string& s);
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace vlnpilot
