#pragma once

#include "vlnpilot/fsm.hpp"
#include "vlnpilot/mission.hpp"
#include "vlnpilot/percept.hpp"
#include "vlnpilot/pilot.hpp"
#include "vlnpilot/sim.hpp"
#include "vlnpilot/world.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vlnpilot {

enum class Outcome { Success, FalseSuccess, Collision, MaxStepsExceeded, ProtocolError };

std::string_view to_string(Outcome o);

struct TrajectoryEntry {
  int step = 0;
  /// Pose after the command was applied.
  DronePose pose;
  MotionCommand command = MotionCommand::E;
  /// State the decision was made in, and the state it led to.
  FsmState state = FsmState::RecognizeRoom;
  FsmState next_state = FsmState::RecognizeRoom;
  /// Digest of the validated response.
  std::string digest;

  friend bool operator==(const TrajectoryEntry&, const TrajectoryEntry&) = default;
};

struct EpisodeResult {
  std::string episode;
  Outcome outcome = Outcome::ProtocolError;
  int steps_used = 0;
  DronePose spawn;
  DronePose final_pose;
  FsmState final_state = FsmState::RecognizeRoom;
  std::vector<TrajectoryEntry> trajectory;
  std::string transcript_path;
  /// Why a ProtocolError or Collision happened; empty otherwise.
  std::string cause;
  /// Sign flips between consecutive rotation commands.
  int oscillations = 0;

  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

/// Builds one simulator session per episode. `frames` asks for rendered
/// observations.
using SessionFactory = std::function<std::unique_ptr<SimSession>(bool frames)>;

SessionFactory local_sessions(std::shared_ptr<const FloorPlan> plan, SimConfig sim,
                              CameraModel camera);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EpisodeConfig {
  std::string episode = "ep";
  std::shared_ptr<const FloorPlan> plan;
  /// Path the plan was loaded from; written to transcript headers.
  std::string plan_path;
  std::string spawn_id;
  DronePose spawn;
  Query query;
  int max_steps = 50;
  SuccessCriteria criteria;
  CameraModel camera;
  SimConfig sim;
  std::string prompt_variant = "standard";
  /// Empty disables transcript writing.
  std::filesystem::path transcript;
  /// Empty disables frame dumps.
  std::filesystem::path save_frames;
};

/// Throws ConfigError for invalid configurations.
void validate_config(const EpisodeConfig& config);

/// Runs one episode to termination. Runtime failures become outcomes.
EpisodeResult run_episode(const EpisodeConfig& config, Pilot& pilot, SimSession& session);
/// Creates the session from `sessions`.
EpisodeResult run_episode(const EpisodeConfig& config, Pilot& pilot, const SessionFactory& sessions);

/// Derives ground truth from free text by looking for an object label, then a
/// room id or label fragment ("kitchen", "living room"). Throws ConfigError if
/// nothing or more than one room matches.
Query infer_query(const FloorPlan& plan, std::string_view text);

/// Ground-truth goal check applied when a pilot declares Final.
bool check_success(const FloorPlan& plan, const DronePose& pose, const Query& query,
                   FsmState final_fsm_state, const SuccessCriteria& criteria = {},
                   const CameraModel& camera = {});

/// Sign flips in consecutive rotation commands (B vs C group).
int count_oscillations(const std::vector<MotionCommand>& commands);

/// Benchmark description, usually loaded from a suite file.
struct SuiteRow {
  std::string spawn;
  Query query;
};

struct Suite {
  std::string name;
  std::filesystem::path plan;
  int repetitions = 5;
  int max_steps = 50;
  std::vector<SuiteRow> rows;
};

/// Relative plan paths are resolved against the suite file's directory.
Suite load_suite(const std::filesystem::path& path);
Suite parse_suite(std::string_view text, const std::filesystem::path& base_dir = {});

struct EpisodeSpec {
  std::size_t row = 0;
  int repetition = 0;
  std::string episode;  // "r{row}_{rep}"
};

using PilotFactory = std::function<std::unique_ptr<Pilot>(const EpisodeSpec&)>;

struct BenchmarkOptions {
  int parallelism = 1;
  SuccessCriteria criteria;
  CameraModel camera;
  SimConfig sim;
  /// Per-episode transcripts land here as {episode}.jsonl when non-empty.
  std::filesystem::path transcript_dir;
  std::filesystem::path save_frames;
};

struct ReportCell {
  int n = 0;
  int achieved = 0;
  int false_success = 0;
  int collisions = 0;
  int max_steps = 0;
  int protocol_errors = 0;

  friend bool operator==(const ReportCell&, const ReportCell&) = default;
};

struct ReportRow {
  std::string starting_room;  // room label
  std::string query;
  /// One cell per pilot, in BenchmarkReport::pilots order.
  std::vector<ReportCell> cells;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct BenchmarkReport {
  std::vector<std::string> pilots;
  std::vector<ReportRow> rows;
  std::vector<EpisodeResult> episodes;

  friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

void add_outcome(ReportCell& cell, Outcome o);

/// Runs rows x repetitions. Episodes are independent; up to `parallelism`
/// run at once. Results are aggregated in suite order regardless.
BenchmarkReport run_benchmark(const Suite& suite, std::shared_ptr<const FloorPlan> plan,
                              const std::string& pilot_name, const PilotFactory& pilots,
                              const SessionFactory& sessions, const BenchmarkOptions& options = {});

/// Column-wise merge of reports over the same suite (one column group per pilot).
BenchmarkReport merge_reports(const std::vector<BenchmarkReport>& reports);

enum class ReportFormat { Markdown, Csv };

std::string emit_report(const BenchmarkReport& report, ReportFormat format);

/// Top-down SVG of one episode.
std::string emit_trajectory_plot(const EpisodeResult& result, const FloorPlan& plan);

}  // namespace vlnpilot
