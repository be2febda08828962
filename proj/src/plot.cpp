#include "vlnpilot/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace vlnpilot {

namespace {

constexpr double kScale = 60.0;  // px per meter
constexpr double kMargin = 0.6;  // meters

std::string_view state_color(FsmState s) {
  switch (s) {
    case FsmState::RecognizeRoom: return "#1f77b4";
    case FsmState::SearchOpenDoor: return "#ff7f0e";
    case FsmState::OrientTowardsDoor: return "#bcbd22";
    case FsmState::GoThroughDoor: return "#d62728";
    case FsmState::StayOnRoom: return "#2ca02c";
    case FsmState::SearchObject: return "#9467bd";
    case FsmState::ReachObject: return "#8c564b";
    case FsmState::DescribeObject: return "#e377c2";
    case FsmState::Start:
    case FsmState::Final: break;
  }
  return "#7f7f7f";
}

std::string_view outcome_color(Outcome o) {
  switch (o) {
    case Outcome::Success: return "#2ca02c";
    case Outcome::FalseSuccess: return "#ff7f0e";
    case Outcome::Collision: return "#d62728";
    case Outcome::MaxStepsExceeded: return "#7f7f7f";
    case Outcome::ProtocolError: return "#9467bd";
  }
  return "#000000";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(double min_x, double max_z) : min_x_(min_x), max_z_(max_z) {}

  std::string x(double v) const { return num((v - min_x_ + kMargin) * kScale); }
  std::string y(double z) const { return num((max_z_ - z + kMargin) * kScale); }
  static std::string len(double m) { return num(m * kScale); }

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }

 private:
  double min_x_, max_z_;
};

}  // namespace

std::string emit_trajectory_plot(const EpisodeResult& result, const FloorPlan& plan) {
  double min_x = std::numeric_limits<double>::infinity(), min_z = min_x;
  double max_x = -min_x, max_z = -min_x;
  auto grow = [&](double x, double z) {
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_z = std::min(min_z, z);
    max_z = std::max(max_z, z);
  };
  for (const auto& r : plan.rooms) {
    grow(r.footprint.min.x(), r.footprint.min.y());
    grow(r.footprint.max.x(), r.footprint.max.y());
  }
  grow(result.spawn.x, result.spawn.z);
  for (const auto& t : result.trajectory) grow(t.pose.x, t.pose.z);

  const Canvas cv(min_x, max_z);
  const double w = (max_x - min_x + 2 * kMargin) * kScale;
  const double h = (max_z - min_z + 2 * kMargin) * kScale + 40.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Canvas::num(w) << "\" height=\""
     << Canvas::num(h) << "\" viewBox=\"0 0 " << Canvas::num(w) << ' ' << Canvas::num(h) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  os << "<g id=\"rooms\" fill=\"#f4f1ea\" stroke=\"#b0a898\" stroke-width=\"1\">\n";
  for (const auto& r : plan.rooms) {
    os << "<rect x=\"" << cv.x(r.footprint.min.x()) << "\" y=\"" << cv.y(r.footprint.max.y())
       << "\" width=\"" << Canvas::len(r.footprint.width()) << "\" height=\""
       << Canvas::len(r.footprint.depth()) << "\"/>\n";
  }
  os << "</g>\n<g id=\"labels\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#555555\">\n";
  for (const auto& r : plan.rooms) {
    os << "<text x=\"" << cv.x(r.footprint.min.x() + 0.15) << "\" y=\""
       << cv.y(r.footprint.max.y() - 0.3) << "\">" << xml_escape(r.label) << "</text>\n";
  }
  os << "</g>\n<g id=\"furniture\" fill=\"#d9d4c7\" stroke=\"#a39e90\" stroke-width=\"0.5\">\n";
  for (const auto& f : plan.furniture) {
    os << "<rect x=\"" << cv.x(f.footprint.min.x()) << "\" y=\"" << cv.y(f.footprint.max.y())
       << "\" width=\"" << Canvas::len(f.footprint.width()) << "\" height=\""
       << Canvas::len(f.footprint.depth()) << "\"/>\n";
  }
  os << "</g>\n<g id=\"walls\" stroke=\"#333333\" stroke-linecap=\"butt\">\n";
  for (const auto& wl : plan.walls) {
    os << "<line x1=\"" << cv.x(wl.segment.a.x()) << "\" y1=\"" << cv.y(wl.segment.a.y()) << "\" x2=\""
       << cv.x(wl.segment.b.x()) << "\" y2=\"" << cv.y(wl.segment.b.y()) << "\" stroke-width=\""
       << Canvas::len(wl.thickness) << "\"/>\n";
  }
  os << "</g>\n<g id=\"doors\" stroke=\"#963228\" stroke-width=\"3\" stroke-dasharray=\"4 3\">\n";
  for (const auto& d : plan.doors) {
    os << "<line x1=\"" << cv.x(d.opening.a.x()) << "\" y1=\"" << cv.y(d.opening.a.y()) << "\" x2=\""
       << cv.x(d.opening.b.x()) << "\" y2=\"" << cv.y(d.opening.b.y()) << "\"/>\n";
  }
  os << "</g>\n<g id=\"targets\" stroke=\"#000000\" stroke-width=\"0.5\">\n";
  for (const auto& o : plan.objects) {
    os << "<circle cx=\"" << cv.x(o.position.x()) << "\" cy=\"" << cv.y(o.position.y()) << "\" r=\""
       << Canvas::len(o.visual_radius()) << "\" fill=\"" << to_hex(o.color) << "\"/>\n";
  }

  os << "</g>\n<g id=\"path\" stroke-width=\"2.5\" stroke-linecap=\"round\">\n";
  DronePose prev = result.spawn;
  for (const auto& t : result.trajectory) {
    os << "<line x1=\"" << cv.x(prev.x) << "\" y1=\"" << cv.y(prev.z) << "\" x2=\"" << cv.x(t.pose.x)
       << "\" y2=\"" << cv.y(t.pose.z) << "\" stroke=\"" << state_color(t.state) << "\"/>\n";
    prev = t.pose;
  }
  os << "</g>\n<g id=\"headings\" stroke=\"#444444\" stroke-width=\"1\">\n";
  for (const auto& t : result.trajectory) {
    const Vec2 hd = t.pose.ground() + 0.15 * t.pose.heading();
    os << "<line x1=\"" << cv.x(t.pose.x) << "\" y1=\"" << cv.y(t.pose.z) << "\" x2=\"" << cv.x(hd.x())
       << "\" y2=\"" << cv.y(hd.y()) << "\"/>\n";
  }
  os << "</g>\n";

  const Vec2 sh = result.spawn.ground() + 0.3 * result.spawn.heading();
  os << "<g id=\"spawn\" stroke=\"#2ca02c\" stroke-width=\"2\" fill=\"none\">\n<circle cx=\""
     << cv.x(result.spawn.x) << "\" cy=\"" << cv.y(result.spawn.z) << "\" r=\"7\"/>\n<line x1=\""
     << cv.x(result.spawn.x) << "\" y1=\"" << cv.y(result.spawn.z) << "\" x2=\"" << cv.x(sh.x())
     << "\" y2=\"" << cv.y(sh.y()) << "\"/>\n</g>\n";

  const std::string ex = cv.x(result.final_pose.x), ey = cv.y(result.final_pose.z);
  os << "<g id=\"terminal\" fill=\"" << outcome_color(result.outcome) << "\">\n"
     << "<rect x=\"" << ex << "\" y=\"" << ey << "\" width=\"10\" height=\"10\" transform=\"translate(-5 -5)\"/>\n"
     << "</g>\n";

  os << "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  double lx = 8.0;
  const double ly = h - 14.0;
  for (FsmState s : kAllStates) {
    if (s == FsmState::Start || s == FsmState::Final) continue;
    os << "<rect x=\"" << Canvas::num(lx) << "\" y=\"" << Canvas::num(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
       << state_color(s) << "\"/><text x=\"" << Canvas::num(lx + 13) << "\" y=\"" << Canvas::num(ly) << "\">"
       << to_string(s) << "</text>\n";
    lx += 13 + 7.0 * static_cast<double>(to_string(s).size()) + 10;
  }
  os << "<text x=\"" << Canvas::num(8.0) << "\" y=\"" << Canvas::num(ly - 16) << "\">" << xml_escape(result.episode)
     << ": " << to_string(result.outcome) << " in " << result.steps_used << " steps</text>\n";
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace vlnpilot
