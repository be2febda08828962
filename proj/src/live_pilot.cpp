#include "vlnpilot/pilot.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>

namespace vlnpilot {

namespace {

using nlohmann::json;

constexpr std::string_view kOpenAIBase = "https://api.openai.com";
constexpr std::string_view kGeminiBase = "https://generativelanguage.googleapis.com";

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_endpoint(std::string url) {
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme = url.find("://");
  const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string feedback_text(const std::vector<std::string>& violations) {
  std::string s = "Your previous answer was rejected:\n";
  for (const auto& v : violations) s += "- " + v + "\n";
  s += "Respond again with a single JSON object that uses only the movement commands and next "
       "states allowed in the current state.";
  return s;
}

json openai_body(const PilotConfig& c, const PromptBundle& b, const std::string& user) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", user}});
  content.push_back(
      {{"type", "image_url"},
       {"image_url", {{"url", "data:image/png;base64," + b.frontal_image}}}});
  return {{"model", c.model},
          {"temperature", c.temperature},
          {"messages",
           {{{"role", "system"}, {"content", b.instructions()}},
            {{"role", "user"}, {"content", content}}}}};
}

json gemini_body(const PilotConfig& c, const PromptBundle& b, const std::string& user) {
  json parts = json::array();
  parts.push_back({{"text", user}});
  parts.push_back({{"inline_data", {{"mime_type", "image/png"}, {"data", b.frontal_image}}}});
  return {{"systemInstruction", {{"parts", {{{"text", b.instructions()}}}}}},
          {"contents", {{{"role", "user"}, {"parts", parts}}}},
          {"generationConfig", {{"temperature", c.temperature}}}};
}

/// Pulls the assistant text out of a provider envelope; falls back to the body.
std::string extract_text(Provider p, const std::string& body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) return body;
  try {
    if (p == Provider::GeminiCompatible) {
      std::string out;
      for (const auto& part : j.at("candidates").at(0).at("content").at("parts"))
        if (part.contains("text")) out += part.at("text").get<std::string>();
      return out;
    }
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    std::string out;
    for (const auto& part : content)
      if (part.contains("text")) out += part.at("text").get<std::string>();
    return out;
  } catch (const json::exception&) {
    return body;
  }
}

}  // namespace

LivePilot::LivePilot(PilotConfig config) : config_(std::move(config)) {
  if (config_.provider != Provider::OpenAICompatible && config_.provider != Provider::GeminiCompatible)
    throw std::invalid_argument("LivePilot needs an openai or gemini provider");
  if (config_.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  const bool openai = config_.provider == Provider::OpenAICompatible;
  if (config_.endpoint.empty()) config_.endpoint = openai ? kOpenAIBase : kGeminiBase;
  if (config_.model.empty()) config_.model = openai ? "gpt-4.1" : "gemini-2.5-flash";
  api_key_ = config_.api_key;
  if (api_key_.empty()) {
    const char* env = std::getenv(openai ? "OPENAI_API_KEY" : "GEMINI_API_KEY");
    if (env) api_key_ = env;
  }
  if (api_key_.empty())
    throw std::invalid_argument(std::string("missing API key: set ") +
                                (openai ? "OPENAI_API_KEY" : "GEMINI_API_KEY"));
}

std::string LivePilot::kind() const {
  return config_.provider == Provider::OpenAICompatible ? "openai" : "gemini";
}

std::string LivePilot::complete(const PromptBundle& bundle, const std::string& feedback) {
  const Endpoint ep = split_endpoint(config_.endpoint);
  httplib::Client cli(ep.origin);
  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  const auto usecs = static_cast<time_t>((config_.timeout_seconds - secs) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);

  std::string user = bundle.user_text();
  if (!feedback.empty()) user += "\n\n" + feedback;

  httplib::Headers headers;
  std::string path;
  json body;
  if (config_.provider == Provider::OpenAICompatible) {
    headers.emplace("Authorization", "Bearer " + api_key_);
    path = ep.prefix + "/v1/chat/completions";
    body = openai_body(config_, bundle, user);
  } else {
    headers.emplace("x-goog-api-key", api_key_);
    path = ep.prefix + "/v1beta/models/" + config_.model + ":generateContent";
    body = gemini_body(config_, bundle, user);
  }

  auto res = cli.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
      throw TimeoutError("request to " + ep.origin + " timed out");
    throw TransportError("request to " + ep.origin + " failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) throw HttpStatusError(res->status, res->body);
  return extract_text(config_.provider, res->body);
}

Decision LivePilot::decide_bundle(const PromptBundle& bundle, FsmState current, int step) {
  TranscriptRecord rec;
  rec.step = step;
  rec.state = current;
  rec.prompt_digest = bundle.digest();

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };

  std::string feedback;
  for (int attempt = 1; attempt <= config_.max_retries + 1; ++attempt) {
    rec.attempts = attempt;
    rec.raw = complete(bundle, feedback);
    rec.parsed.reset();
    rec.violations.clear();
    try {
      const PilotResponse r = parse_response(rec.raw);
      rec.parsed = r;
      for (const auto& v : validate(current, {r.movement, r.state})) rec.violations.push_back(v.message);
    } catch (const ResponseError& e) {
      rec.violations.push_back(e.what());
    }
    if (rec.violations.empty()) {
      rec.latency_ms = elapsed_ms();
      return {*rec.parsed, rec};
    }
    feedback = feedback_text(rec.violations);
  }
  rec.latency_ms = elapsed_ms();
  throw RetriesExhaustedError(rec);
}

Decision LivePilot::decide(const PilotContext& ctx) {
  std::string image;
  if (ctx.observation.frames)
    image = base64_encode(ctx.observation.frames->front_png);
  else
    image = render_frontal(ctx.plan, ctx.observation.pose(), ctx.camera).base64_png();
  PromptOptions opts = config_.prompt;
  opts.rotation = ctx.sim.rotation;
  const PromptBundle bundle = build_prompt(ctx.query.text, ctx.map, ctx.current_state,
                                           ctx.previous_state, ctx.previous_move, image, opts);
  return decide_bundle(bundle, ctx.current_state, ctx.step);
}

}  // namespace vlnpilot
