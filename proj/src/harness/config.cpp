#include "cdrive/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cdrive::harness {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Calls f(key, field) for every setting, in file order.
template <class S, class F>
void visit(S& s, F&& f) {
  auto& g = s.gen;
  f("gen.suite", g.suite);
  f("gen.seed", g.seed);
  f("gen.records", g.n_records);
  f("gen.sim_dt", g.sim_dt);
  f("gen.record_stride", g.record_stride);
  f("gen.holdout_fraction", g.holdout_fraction);
  auto& e = g.expert;
  f("expert.desired_speed", e.desired_speed);
  f("expert.max_accel", e.max_accel);
  f("expert.comfortable_decel", e.comfortable_decel);
  f("expert.min_gap", e.min_gap);
  f("expert.headway", e.headway);
  f("expert.lookahead", e.lookahead);
  f("expert.lookahead_time", e.lookahead_time);
  f("expert.force_stop_radius", e.force_stop_radius);
  f("expert.stop_wait", e.stop_wait);
  f("expert.lead_range", e.lead_range);
  auto& l = g.labeler;
  f("labeler.straight_curvature", l.straight_curvature);
  f("labeler.min_turn_path", l.min_turn_path);
  f("labeler.stopped_speed", l.stopped_speed);
  f("labeler.slow_min", l.slow_min);
  f("labeler.slow_max", l.slow_max);
  f("labeler.asv_range", l.asv_range);
  f("labeler.asv_speed", l.asv_speed);
  f("labeler.close_distance", l.close_distance);
  f("labeler.stop_sign_range", l.stop_sign_range);
  f("labeler.light_range", l.light_range);
  f("labeler.pedestrian_range", l.pedestrian_range);
  f("labeler.cyclist_range", l.cyclist_range);
  f("labeler.following_range", l.following_range);
  auto& t = g.trajgen;
  f("trajgen.speed_samples", t.speed_samples);
  f("trajgen.lateral_samples", t.lateral_samples);
  f("trajgen.speed_limit", t.speed_limit);
  f("trajgen.lateral_span", t.lateral_span);
  f("trajgen.dt", t.dt);
  f("trajgen.horizon", t.horizon);
  f("trajgen.longitudinal_accel", t.longitudinal_accel);
  f("trajgen.min_transition_time", t.min_transition_time);
  f("trajgen.lateral_transition", t.lateral_transition);
  f("trajgen.proposals", t.proposals);
  f("trajgen.proposal_accel", t.proposal_accel);
  f("trajgen.proposal_decel", t.proposal_decel);
  f("trajgen.max_anchor_distance", t.max_anchor_distance);
  auto& d = s.dims;
  f("model.object_hidden", d.object_hidden);
  f("model.scene", d.scene);
  f("model.gru", d.gru);
  f("model.fuse", d.fuse);
  f("model.z", d.z);
  f("model.reward_hidden", d.reward_hidden);
  f("model.concept_hidden", d.concept_hidden);
  f("model.concept_reward_hidden", d.concept_reward_hidden);
  auto& p = s.train;
  f("train.epochs", p.epochs);
  f("train.batch_size", p.batch_size);
  f("train.learning_rate", p.adam.learning_rate);
  f("train.focal_gamma", p.focal_gamma);
  f("train.seed", p.seed);
  auto& c = s.cwnet;
  f("cwnet.epochs", c.epochs);
  f("cwnet.batch_size", c.batch_size);
  f("cwnet.learning_rate", c.adam.learning_rate);
  f("cwnet.concept_gamma", c.concept_gamma);
  f("cwnet.trajectory_gamma", c.trajectory_gamma);
  f("cwnet.soft_labels", c.soft_labels);
  f("cwnet.seed", c.seed);
  auto& m = s.sim;
  f("sim.duration", m.duration);
  f("sim.dt", m.dt);
  f("sim.sim_dt", m.sim_dt);
  f("sim.backstop", m.backstop);
  f("backstop.max_brake", m.backstop_params.max_brake);
  f("backstop.inflation", m.backstop_params.inflation);
  f("backstop.lookahead_margin", m.backstop_params.lookahead_margin);
  f("backstop.sample_spacing", m.backstop_params.sample_spacing);
  f("tracker.speed_gain", m.tracker.speed_gain);
  f("tracker.min_lookahead", m.tracker.min_lookahead);
  f("tracker.lookahead_time", m.tracker.lookahead_time);
  f("tracker.segment", m.tracker.segment);
  f("vehicle.max_steer", m.limits.max_steer);
  f("vehicle.max_accel", m.limits.max_accel);
  f("vehicle.max_decel", m.limits.max_decel);
  f("vehicle.length", m.limits.ego_length);
  f("vehicle.width", m.limits.ego_width);
  f("eval.scenarios", s.eval_scenarios);
  f("eval.seed", s.eval_seed);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': cannot parse '" + v + "'");
  return out;
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    c.set(key, value);
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse(in);
}

const std::string* Config::find(const std::string& key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

void Config::read(const std::string& key, double& target) {
  if (const auto* v = find(key)) target = parse_number<double>(key, *v);
}
void Config::read(const std::string& key, int& target) {
  if (const auto* v = find(key)) target = parse_number<int>(key, *v);
}
void Config::read(const std::string& key, std::uint64_t& target) {
  if (const auto* v = find(key)) target = parse_number<std::uint64_t>(key, *v);
}
void Config::read(const std::string& key, bool& target) {
  if (const auto* v = find(key)) {
    if (*v == "true" || *v == "1" || *v == "on") target = true;
    else if (*v == "false" || *v == "0" || *v == "off") target = false;
    else throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
  }
}
void Config::read(const std::string& key, std::string& target) {
  if (const auto* v = find(key)) target = *v;
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

void apply(Config& cfg, Settings& s) {
  visit(s, [&](const char* key, auto& field) { cfg.read(key, field); });
  const auto unknown = cfg.unused();
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  s.sim.trajgen = s.gen.trajgen;
  s.sim.validate();
  s.gen.expert.validate();
}

std::string format_settings(const Settings& s) {
  std::ostringstream out;
  visit(s, [&](const char* key, const auto& field) {
    using T = std::decay_t<decltype(field)>;
    out << key << " = ";
    if constexpr (std::is_same_v<T, bool>) {
      out << (field ? "true" : "false");
    } else if constexpr (std::is_same_v<T, double>) {
      char buf[32];
      const auto r = std::to_chars(buf, buf + sizeof buf, field);
      out << std::string(buf, r.ptr);
    } else {
      out << field;
    }
    out << '\n';
  });
  return out.str();
}

}  // namespace cdrive::harness
