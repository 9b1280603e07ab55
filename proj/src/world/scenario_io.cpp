#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cdrive/world/world.hpp"

namespace cdrive::world {

namespace {

using Fields = std::map<std::string, std::string>;

Fields split_fields(std::istringstream& tokens) {
  Fields f;
  std::string tok;
  while (tokens >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected key=value, got '" + tok + "'");
    f[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return f;
}

const std::string& need(const Fields& f, const std::string& key) {
  const auto it = f.find(key);
  if (it == f.end()) throw std::invalid_argument("missing field '" + key + "'");
  return it->second;
}

double num(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

double num_or(const Fields& f, const std::string& key, double fallback) {
  const auto it = f.find(key);
  return it == f.end() ? fallback : num(it->second);
}

std::vector<double> num_list(const std::string& s, char sep) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(num(item));
  return out;
}

std::vector<Vec2> points(const std::string& s) {
  std::vector<Vec2> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ';')) {
    const auto xy = num_list(item, ',');
    if (xy.size() != 2) throw std::invalid_argument("bad point '" + item + "'");
    out.push_back({xy[0], xy[1]});
  }
  return out;
}

std::vector<std::string> names(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_points(const std::vector<Vec2>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ';';
    s += fmt(pts[i].x) + "," + fmt(pts[i].y);
  }
  return s;
}

LightState light_state(const std::string& s) {
  if (s == "red") return LightState::red;
  if (s == "green") return LightState::green;
  throw std::invalid_argument("unknown light state '" + s + "'");
}

Agent agent_from(const Fields& f) {
  Agent a;
  a.id = need(f, "id");
  a.category = category_from_string(need(f, "category"));
  a.pose = {num_or(f, "x", 0.0), num_or(f, "y", 0.0), num_or(f, "heading", 0.0)};
  a.speed = num_or(f, "speed", 0.0);
  a.length = num_or(f, "length", 4.5);
  a.width = num_or(f, "width", 1.8);
  const std::string script = f.count("script") ? f.at("script") : "stationary";
  if (script == "stationary") {
    a.script.kind = ScriptKind::stationary;
    a.speed = 0.0;
  } else if (script == "follow_path" || script == "follow_lead") {
    a.script.kind = script == "follow_path" ? ScriptKind::follow_path : ScriptKind::follow_lead;
    a.script.path = points(need(f, "path"));
    if (a.script.path.size() < 2) throw std::invalid_argument("agent path needs >= 2 points");
    a.script.cruise_speed = num(need(f, "cruise"));
    a.script.start_delay = num_or(f, "delay", 0.0);
    a.path_progress = num_or(f, "start", 0.0);
    if (a.script.kind == ScriptKind::follow_lead) {
      a.script.lead_id = need(f, "lead");
      a.script.min_gap = num_or(f, "gap", 4.0);
    }
  } else {
    throw std::invalid_argument("unknown script '" + script + "'");
  }
  return a;
}

}  // namespace

Agent parse_agent_fields(const std::string& fields) {
  std::istringstream in(fields);
  return agent_from(split_fields(in));
}

std::string format_agent_fields(const Agent& a) {
  std::string s = "id=" + a.id + " category=" + to_string(a.category) + " x=" + fmt(a.pose.x) +
                  " y=" + fmt(a.pose.y) + " heading=" + fmt(a.pose.heading) + " speed=" + fmt(a.speed) +
                  " length=" + fmt(a.length) + " width=" + fmt(a.width);
  switch (a.script.kind) {
    case ScriptKind::stationary: s += " script=stationary"; break;
    case ScriptKind::follow_path: s += " script=follow_path"; break;
    case ScriptKind::follow_lead: s += " script=follow_lead"; break;
  }
  if (a.script.kind != ScriptKind::stationary) {
    s += " path=" + fmt_points(a.script.path) + " cruise=" + fmt(a.script.cruise_speed) +
         " delay=" + fmt(a.script.start_delay) + " start=" + fmt(a.path_progress);
    if (a.script.kind == ScriptKind::follow_lead)
      s += " lead=" + a.script.lead_id + " gap=" + fmt(a.script.min_gap);
  }
  return s;
}

Scenario parse_scenario(std::istream& in) {
  Scenario sc;
  std::string line;
  int lineno = 0;
  bool have_route = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string kind;
    if (!(tokens >> kind)) continue;
    try {
      const Fields f = split_fields(tokens);
      if (kind == "scenario") {
        sc.name = need(f, "name");
        sc.duration = num_or(f, "duration", sc.duration);
      } else if (kind == "ego") {
        sc.ego.position = {num(need(f, "x")), num(need(f, "y"))};
        sc.ego.heading = num_or(f, "heading", 0.0);
        sc.ego.speed = num_or(f, "speed", 0.0);
        sc.ego.wheelbase = num_or(f, "wheelbase", 2.5);
        if (sc.ego.speed < 0.0) throw std::invalid_argument("ego speed must be >= 0");
      } else if (kind == "lane") {
        sc.map.push_back(Lane{need(f, "id"), points(need(f, "points")), num_or(f, "width", 3.5)});
      } else if (kind == "route") {
        sc.route_lanes = names(need(f, "lanes"));
        sc.goal_arclength = num_or(f, "goal", -1.0);
        have_route = true;
      } else if (kind == "agent") {
        sc.agents.push_back(agent_from(f));
      } else if (kind == "intersection") {
        sc.map.push_back(IntersectionArea{need(f, "id"), points(need(f, "polygon"))});
      } else if (kind == "pudo") {
        sc.map.push_back(PudoZone{need(f, "id"), points(need(f, "polygon"))});
      } else if (kind == "stop_sign") {
        const auto line_pts = points(need(f, "line"));
        if (line_pts.size() != 2) throw std::invalid_argument("stop line needs 2 points");
        sc.map.push_back(StopSign{need(f, "id"), {num(need(f, "x")), num(need(f, "y"))}, line_pts[0], line_pts[1]});
      } else if (kind == "traffic_light") {
        const auto line_pts = points(need(f, "line"));
        if (line_pts.size() != 2) throw std::invalid_argument("stop line needs 2 points");
        TrafficLight tl{need(f, "id"), {num(need(f, "x")), num(need(f, "y"))}, line_pts[0], line_pts[1],
                        light_state(f.count("state") ? f.at("state") : "red"), std::nullopt};
        if (f.count("cycle")) {
          const auto c = num_list(f.at("cycle"), ',');
          if (c.size() != 3) throw std::invalid_argument("cycle needs red,green,offset");
          tl.cycle = LightCycle{c[0], c[1], c[2]};
        }
        sc.map.push_back(tl);
      } else {
        throw std::invalid_argument("unknown record kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("scenario line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_route) throw std::runtime_error("scenario has no route record");
  for (const auto& e : sc.map) validate(e);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  return parse_scenario(in);
}

void write_scenario(std::ostream& out, const Scenario& sc) {
  out << "scenario name=" << sc.name << " duration=" << fmt(sc.duration) << '\n';
  out << "ego x=" << fmt(sc.ego.position.x) << " y=" << fmt(sc.ego.position.y)
      << " heading=" << fmt(sc.ego.heading) << " speed=" << fmt(sc.ego.speed)
      << " wheelbase=" << fmt(sc.ego.wheelbase) << '\n';
  for (const auto& e : sc.map) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Lane>) {
            out << "lane id=" << v.id << " width=" << fmt(v.width) << " points=" << fmt_points(v.centerline);
          } else if constexpr (std::is_same_v<T, IntersectionArea>) {
            out << "intersection id=" << v.id << " polygon=" << fmt_points(v.polygon);
          } else if constexpr (std::is_same_v<T, PudoZone>) {
            out << "pudo id=" << v.id << " polygon=" << fmt_points(v.polygon);
          } else if constexpr (std::is_same_v<T, StopSign>) {
            out << "stop_sign id=" << v.id << " x=" << fmt(v.position.x) << " y=" << fmt(v.position.y)
                << " line=" << fmt_points({v.stop_line_a, v.stop_line_b});
          } else if constexpr (std::is_same_v<T, TrafficLight>) {
            out << "traffic_light id=" << v.id << " x=" << fmt(v.position.x) << " y=" << fmt(v.position.y)
                << " line=" << fmt_points({v.stop_line_a, v.stop_line_b})
                << " state=" << (v.state == LightState::red ? "red" : "green");
            if (v.cycle)
              out << " cycle=" << fmt(v.cycle->red) << ',' << fmt(v.cycle->green) << ',' << fmt(v.cycle->offset);
          }
          out << '\n';
        },
        e);
  }
  out << "route lanes=";
  for (std::size_t i = 0; i < sc.route_lanes.size(); ++i) out << (i ? "," : "") << sc.route_lanes[i];
  out << " goal=" << fmt(sc.goal_arclength) << '\n';
  for (const auto& a : sc.agents) out << "agent " << format_agent_fields(a) << '\n';
}

}  // namespace cdrive::world
