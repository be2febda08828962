#include "vlnpilot/pilot.hpp"

namespace vlnpilot {

HttpStatusError::HttpStatusError(int code, const std::string& body)
    : PilotError("provider returned HTTP " + std::to_string(code) +
                 (body.empty() ? "" : ": " + body.substr(0, 200))),
      code_(code) {}

RetriesExhaustedError::RetriesExhaustedError(TranscriptRecord record)
    : PilotError([&] {
        std::string msg = "no valid response after " + std::to_string(record.attempts) + " attempts";
        for (const auto& v : record.violations) msg += "; " + v;
        return msg;
      }()),
      record_(std::move(record)) {}

std::string_view to_string(Provider p) {
  switch (p) {
    case Provider::OpenAICompatible: return "openai";
    case Provider::GeminiCompatible: return "gemini";
    case Provider::Oracle: return "oracle";
    case Provider::Replay: return "replay";
  }
  return "?";
}

std::optional<Provider> parse_provider(std::string_view s) {
  if (s == "openai" || s == "openai-compatible") return Provider::OpenAICompatible;
  if (s == "gemini" || s == "gemini-compatible") return Provider::GeminiCompatible;
  if (s == "oracle") return Provider::Oracle;
  if (s == "replay") return Provider::Replay;
  return std::nullopt;
}

PilotResponse decide_replay(const Transcript& transcript, int step) {
  const TranscriptRecord* r = transcript.at_step(step);
  if (!r || !r->parsed)
    throw StepOutOfRangeError("transcript has no response for step " + std::to_string(step));
  return *r->parsed;
}

ReplayPilot::ReplayPilot(Transcript transcript) : transcript_(std::move(transcript)) {}

ReplayPilot::ReplayPilot(const std::filesystem::path& path) : transcript_(read_transcript(path)) {}

Decision ReplayPilot::decide(const PilotContext& ctx) {
  const PilotResponse r = decide_replay(transcript_, ctx.step);
  TranscriptRecord rec = *transcript_.at_step(ctx.step);
  rec.state = ctx.current_state;
  rec.latency_ms = 0.0;
  return {r, rec};
}

std::unique_ptr<Pilot> make_pilot(const PilotConfig& config) {
  switch (config.provider) {
    case Provider::Oracle: return std::make_unique<OraclePilot>();
    case Provider::Replay: return std::make_unique<ReplayPilot>(config.transcript);
    case Provider::OpenAICompatible:
    case Provider::GeminiCompatible: return std::make_unique<LivePilot>(config);
  }
  throw std::invalid_argument("unknown provider");
}

}  // namespace vlnpilot
