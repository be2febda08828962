#include "vlnpilot/response.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <optional>

namespace vlnpilot {

namespace {

using nlohmann::json;

constexpr std::string_view kFields[] = {"room", "movement", "state", "description", "door_position"};

/// Index one past the brace closing the object opened at `open`, or npos.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') quote = c;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Rewrites Python literal syntax (single-quoted strings, True/False/None)
/// into JSON. Double-quoted input passes through untouched.
std::string pythonic_to_json(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') {
      const std::size_t start = i++;
      for (; i < s.size() && s[i] != '"'; ++i)
        if (s[i] == '\\') ++i;
      out.append(s.substr(start, i - start + 1));
      continue;
    }
    if (c == '\'') {
      out += '"';
      for (++i; i < s.size() && s[i] != '\''; ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
          if (s[i + 1] == '\'') out += '\'';
          else out.append(s.substr(i, 2));
          ++i;
        } else if (s[i] == '"') {
          out += "\\\"";
        } else {
          out += s[i];
        }
      }
      out += '"';
      continue;
    }
    if (ident_char(c) && (i == 0 || !ident_char(s[i - 1]))) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      const std::string_view word = s.substr(i, j - i);
      if (word == "True") out += "true";
      else if (word == "False") out += "false";
      else if (word == "None") out += "null";
      else out.append(word);
      i = j - 1;
      continue;
    }
    out += c;
  }
  return out;
}

std::optional<json> first_object(std::string_view raw) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos;
       open = raw.find('{', open + 1)) {
    const std::size_t end = match_brace(raw, open);
    if (end == std::string_view::npos) continue;
    const std::string_view candidate = raw.substr(open, end - open);
    for (const std::string& text : {std::string(candidate), pythonic_to_json(candidate)}) {
      json j = json::parse(text, nullptr, false);
      if (!j.is_discarded() && j.is_object()) return j;
    }
  }
  return std::nullopt;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string as_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace

ResponseError::ResponseError(Kind kind, std::string detail)
    : std::runtime_error(std::string(to_string(kind)) + (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      detail_(std::move(detail)) {}

std::string_view to_string(ResponseError::Kind k) {
  switch (k) {
    case ResponseError::Kind::NoObjectFound: return "NoObjectFound";
    case ResponseError::Kind::MissingField: return "MissingField";
    case ResponseError::Kind::UnknownMovement: return "UnknownMovement";
    case ResponseError::Kind::UnknownState: return "UnknownState";
    case ResponseError::Kind::UnknownDoorPosition: return "UnknownDoorPosition";
  }
  return "?";
}

PilotResponse parse_response(std::string_view raw) {
  const auto obj = first_object(raw);
  if (!obj) throw ResponseError(ResponseError::Kind::NoObjectFound, "");

  std::optional<json> fields[std::size(kFields)];
  for (const auto& [key, value] : obj->items()) {
    const std::string k = lower(key);
    for (std::size_t i = 0; i < std::size(kFields); ++i)
      if (k == kFields[i] && !fields[i]) fields[i] = value;
  }
  for (std::size_t i = 0; i < std::size(kFields); ++i)
    if (!fields[i]) throw ResponseError(ResponseError::Kind::MissingField, std::string(kFields[i]));

  PilotResponse r;
  r.room = as_text(*fields[0]);
  const std::string move = as_text(*fields[1]);
  const auto cmd = parse_command(move);
  if (!cmd) throw ResponseError(ResponseError::Kind::UnknownMovement, move);
  r.movement = *cmd;
  const std::string state = as_text(*fields[2]);
  const auto st = parse_state(state);
  if (!st) throw ResponseError(ResponseError::Kind::UnknownState, state);
  r.state = *st;
  r.description = as_text(*fields[3]);
  const std::string door = as_text(*fields[4]);
  const auto dp = parse_door_position(door);
  if (!dp) throw ResponseError(ResponseError::Kind::UnknownDoorPosition, door);
  r.door_position = *dp;
  return r;
}

std::string serialize_response(const PilotResponse& r) {
  nlohmann::ordered_json j;
  j["room"] = r.room;
  j["movement"] = to_string(r.movement);
  j["state"] = to_string(r.state);
  j["description"] = r.description;
  j["door_position"] = to_string(r.door_position);
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace vlnpilot
