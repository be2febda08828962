#include "vlnpilot/harness.hpp"

#include <sstream>

namespace vlnpilot {

namespace {

constexpr std::string_view kColumns[] = {"Ach.", "Coll.", "Steps", "False", "Err."};

std::string count(int v) { return v == 0 ? "--" : std::to_string(v); }

std::vector<std::string> cell_values(const ReportCell& c) {
  return {std::to_string(c.achieved) + "/" + std::to_string(c.n), count(c.collisions),
          count(c.max_steps), count(c.false_success), count(c.protocol_errors)};
}

std::vector<std::string> header(const BenchmarkReport& r) {
  std::vector<std::string> h = {"Starting Room", "Query"};
  for (const auto& p : r.pilots)
    for (auto c : kColumns) h.push_back(std::string(c) + " (" + p + ")");
  return h;
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string markdown(const BenchmarkReport& r) {
  std::ostringstream os;
  const auto h = header(r);
  os << '|';
  for (const auto& c : h) os << ' ' << md_escape(c) << " |";
  os << "\n|";
  for (std::size_t i = 0; i < h.size(); ++i) os << (i < 2 ? " --- |" : " ---: |");
  os << '\n';
  const std::string* group = nullptr;
  for (const auto& row : r.rows) {
    // The starting room is named once per group of rows.
    const bool first = !group || *group != row.starting_room;
    group = &row.starting_room;
    os << "| " << (first ? md_escape(row.starting_room) : "") << " | " << md_escape(row.query) << " |";
    for (const auto& cell : row.cells)
      for (const auto& v : cell_values(cell)) os << ' ' << v << " |";
    os << '\n';
  }
  return os.str();
}

std::string csv(const BenchmarkReport& r) {
  std::ostringstream os;
  const auto h = header(r);
  for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "," : "") << csv_field(h[i]);
  os << '\n';
  for (const auto& row : r.rows) {
    os << csv_field(row.starting_room) << ',' << csv_field(row.query);
    for (const auto& cell : row.cells)
      for (const auto& v : cell_values(cell)) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

}  // namespace

std::string emit_report(const BenchmarkReport& report, ReportFormat format) {
  return format == ReportFormat::Markdown ? markdown(report) : csv(report);
}

}  // namespace vlnpilot
