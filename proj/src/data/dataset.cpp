#include "cdrive/data/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cdrive::data {

using nlohmann::json;

const cwnet::ConceptLabels& DatasetRecord::labels_for(const std::string& tag) const {
  const auto it = labels.find(tag);
  if (it == labels.end()) throw std::invalid_argument("record " + std::to_string(index) + " has no '" + tag + "' labels");
  return it->second;
}

std::vector<const DatasetRecord*> Dataset::split(bool holdout) const {
  std::vector<const DatasetRecord*> out;
  for (const auto& r : records)
    if (r.holdout == holdout) out.push_back(&r);
  return out;
}

bool is_holdout(std::uint64_t seed, int scenario, double fraction) {
  const std::uint64_t h = mix_seed(seed ^ 0x5BD1E995ull, static_cast<std::uint64_t>(scenario));
  return static_cast<double>(h >> 11) * 0x1.0p-53 < fraction;
}

namespace {

// Scenes sampled every dt; throws on any collision.
std::vector<world::SceneContext> run_expert(const world::Scenario& scn, double duration, double dt, double sim_dt,
                                            const ExpertConfig& cfg) {
  if (!(dt > 0.0) || !(sim_dt > 0.0)) throw std::invalid_argument("expert rollout: steps must be positive");
  const int sub = static_cast<int>(std::lround(dt / sim_dt));
  if (sub < 1 || std::abs(sub * sim_dt - dt) > 1e-9) throw std::invalid_argument("sample period must be a multiple of sim_dt");
  world::World w(scn);
  ExpertDriver driver(cfg, w.limits());
  const int samples = static_cast<int>(std::floor(duration / dt + 1e-9)) + 1;
  std::vector<world::SceneContext> out;
  out.reserve(samples);
  out.push_back(world::build_scene(w));
  for (int i = 1; i < samples; ++i) {
    for (int k = 0; k < sub; ++k) {
      const world::Control u = driver.act(world::build_scene(w), sim_dt);
      w.step(u, sim_dt);
      const auto col = world::check_collision(w.ego(), w.agents(), w.limits());
      if (col.any) {
        std::ostringstream msg;
        msg << "expert collided with " << col.agent_id << " at t=" << w.time();
        throw std::runtime_error(msg.str());
      }
    }
    out.push_back(world::build_scene(w));
  }
  return out;
}

trajgen::Waypoint waypoint_of(const world::EgoState& e) { return {e.position.x, e.position.y, e.heading, e.speed}; }

}  // namespace

std::vector<world::EgoState> expert_rollout(const world::Scenario& scn, double duration, double dt, double sim_dt,
                                            const ExpertConfig& cfg) {
  std::vector<world::EgoState> out;
  for (const auto& s : run_expert(scn, duration, dt, sim_dt, cfg)) out.push_back(s.ego);
  return out;
}

Dataset generate_dataset(const GenerateConfig& cfg, GenerationReport* report) {
  if (cfg.n_records < 0) throw std::invalid_argument("n_records must be non-negative");
  if (cfg.record_stride < 1) throw std::invalid_argument("record_stride must be at least 1");
  cfg.expert.validate();
  const SuiteSpec spec = suite_spec(cfg.suite);
  Dataset ds;
  ds.header.seed = cfg.seed;
  ds.header.suite = cfg.suite;
  ds.header.holdout_fraction = cfg.holdout_fraction;
  ds.header.trajgen = cfg.trajgen;
  GenerationReport local;
  GenerationReport& rep = report ? *report : local;
  if (cfg.n_records == 0) return ds;

  const double dt = cfg.trajgen.dt;
  const int horizon = static_cast<int>(std::lround(cfg.trajgen.horizon / dt));
  const auto schemas = {cwnet::ConceptSchema::dataset1(), cwnet::ConceptSchema::dataset2()};
  const int chunk = 16;
  const int max_scenarios = cfg.n_records * 4 + 64;

  for (int base = 0; static_cast<int>(ds.records.size()) < cfg.n_records; base += chunk) {
    if (base >= max_scenarios) throw std::runtime_error("dataset generation: too many failed scenarios");
    std::vector<world::Scenario> scns(chunk);
    std::vector<std::vector<DatasetRecord>> recs(chunk);
    std::vector<std::string> errors(chunk);
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < chunk; ++j) {
      const int id = base + j;
      try {
        world::Scenario scn = procedural_scenario(spec, mix_seed(cfg.seed, static_cast<std::uint64_t>(id)));
        scn.name += "_" + std::to_string(id);
        const auto scenes = run_expert(scn, scn.duration + horizon * dt, dt, cfg.sim_dt, cfg.expert);
        const bool holdout = is_holdout(cfg.seed, id, cfg.holdout_fraction);
        const int last = static_cast<int>(scenes.size()) - 1 - horizon;
        for (int i = 0; i <= last; i += cfg.record_stride) {
          DatasetRecord r;
          r.scenario = id;
          r.time = i * dt;
          r.scene = scenes[i];
          try {
            r.candidates = trajgen::generate_candidates(r.scene, cfg.trajgen);
          } catch (const trajgen::NoRouteAnchor&) {
            continue;
          }
          r.expert_future.dt = dt;
          for (int k = 0; k <= horizon; ++k) r.expert_future.waypoints.push_back(waypoint_of(scenes[i + k].ego));
          for (const auto& s : schemas) r.labels[s.tag] = label_concepts(r.scene, r.candidates.candidates, s, cfg.labeler);
          r.holdout = holdout;
          recs[j].push_back(std::move(r));
        }
        scns[j] = std::move(scn);
      } catch (const std::exception& e) {
        errors[j] = "scenario " + std::to_string(id) + ": " + e.what();
        recs[j].clear();
      }
    }
    for (int j = 0; j < chunk && static_cast<int>(ds.records.size()) < cfg.n_records; ++j) {
      ++rep.scenarios_run;
      if (!errors[j].empty()) {
        ++rep.scenarios_skipped;
        rep.messages.push_back(errors[j]);
        continue;
      }
      if (recs[j].empty()) continue;
      ds.scenarios.emplace(base + j, std::move(scns[j]));
      for (auto& r : recs[j]) {
        if (static_cast<int>(ds.records.size()) >= cfg.n_records) break;
        r.index = static_cast<int>(ds.records.size());
        ds.records.push_back(std::move(r));
      }
    }
  }
  return ds;
}

// --- persistence -------------------------------------------------------------

namespace {

json trajgen_json(const trajgen::TrajGenParams& p) {
  return {{"speed_samples", p.speed_samples},
          {"lateral_samples", p.lateral_samples},
          {"speed_limit", p.speed_limit},
          {"lateral_span", p.lateral_span},
          {"dt", p.dt},
          {"horizon", p.horizon},
          {"longitudinal_accel", p.longitudinal_accel},
          {"min_transition_time", p.min_transition_time},
          {"lateral_transition", p.lateral_transition},
          {"proposals", p.proposals},
          {"proposal_accel", p.proposal_accel},
          {"proposal_decel", p.proposal_decel},
          {"max_anchor_distance", p.max_anchor_distance}};
}

trajgen::TrajGenParams trajgen_from(const json& j) {
  trajgen::TrajGenParams p;
  p.speed_samples = j.at("speed_samples");
  p.lateral_samples = j.at("lateral_samples");
  p.speed_limit = j.at("speed_limit");
  p.lateral_span = j.at("lateral_span");
  p.dt = j.at("dt");
  p.horizon = j.at("horizon");
  p.longitudinal_accel = j.at("longitudinal_accel");
  p.min_transition_time = j.at("min_transition_time");
  p.lateral_transition = j.at("lateral_transition");
  p.proposals = j.at("proposals");
  p.proposal_accel = j.at("proposal_accel");
  p.proposal_decel = j.at("proposal_decel");
  p.max_anchor_distance = j.at("max_anchor_distance");
  return p;
}

json record_json(const DatasetRecord& r) {
  const auto& e = r.scene.ego;
  json agents = json::array();
  for (const auto& a : r.scene.agents) agents.push_back(world::format_agent_fields(a));
  json lights = json::object();
  if (r.scene.map)
    for (const auto& m : *r.scene.map)
      if (const auto* l = std::get_if<world::TrafficLight>(&m))
        lights[l->id] = l->state == world::LightState::red ? "red" : "green";
  json expert = json::array();
  for (const auto& w : r.expert_future.waypoints) expert.push_back({w.x, w.y, w.heading, w.speed});
  json labels = json::object();
  for (const auto& [tag, l] : r.labels) labels[tag] = {{"group", l.group}, {"binary", l.binary}};
  return {{"kind", "record"},
          {"index", r.index},
          {"scenario", r.scenario},
          {"t", r.time},
          {"ego", {e.position.x, e.position.y, e.heading, e.speed, e.acceleration, e.steering_angle, e.wheelbase}},
          {"agents", agents},
          {"lights", lights},
          {"expert_dt", r.expert_future.dt},
          {"expert", expert},
          {"labels", labels},
          {"blackbox", r.blackbox_choice ? json(*r.blackbox_choice) : json(nullptr)},
          {"holdout", r.holdout}};
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& ds) {
  const json header = {{"seed", ds.header.seed},
                       {"suite", ds.header.suite},
                       {"holdout_fraction", ds.header.holdout_fraction},
                       {"trajgen", trajgen_json(ds.header.trajgen)},
                       {"schemas", {"dataset1", "dataset2"}},
                       {"units", "SI"}};
  out << "#cdrive-dataset " << ds.header.version << ' ' << header.dump() << '\n';
  for (const auto& [id, scn] : ds.scenarios) {
    std::ostringstream text;
    world::write_scenario(text, scn);
    out << json{{"kind", "scenario"}, {"id", id}, {"text", text.str()}}.dump() << '\n';
  }
  for (const auto& r : ds.records) out << record_json(r).dump() << '\n';
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset " + path);
  write_dataset(out, ds);
  if (!out) throw std::runtime_error("failed writing dataset " + path);
}

namespace {

struct ScenarioContext {
  world::Scenario scenario;
  std::shared_ptr<const world::Route> route;
  std::map<std::string, std::shared_ptr<const std::vector<world::MapElement>>> maps;  // by light-state key
};

cwnet::ConceptLabels labels_from(const json& j, const cwnet::ConceptSchema& schema, int candidates) {
  cwnet::ConceptLabels l;
  l.candidates = candidates;
  l.groups = static_cast<int>(schema.groups.size());
  l.binaries = static_cast<int>(schema.binaries.size());
  l.group = j.at("group").get<std::vector<int>>();
  l.binary = j.at("binary").get<std::vector<int>>();
  if (static_cast<int>(l.group.size()) != candidates * l.groups ||
      static_cast<int>(l.binary.size()) != candidates * l.binaries)
    throw std::runtime_error("label width does not match schema " + schema.tag);
  for (std::size_t i = 0; i < l.group.size(); ++i) {
    const int g = static_cast<int>(i) % l.groups;
    if (l.group[i] < 0 || l.group[i] >= static_cast<int>(schema.groups[g].members.size()))
      throw std::runtime_error("group label out of range");
  }
  for (int b : l.binary)
    if (b != 0 && b != 1) throw std::runtime_error("binary label must be 0 or 1");
  return l;
}

DatasetRecord record_from(const json& j, std::map<int, ScenarioContext>& ctx, const DatasetHeader& header) {
  DatasetRecord r;
  r.index = j.at("index");
  r.scenario = j.at("scenario");
  r.time = j.at("t");
  const auto it = ctx.find(r.scenario);
  if (it == ctx.end()) throw std::runtime_error("record refers to unknown scenario " + std::to_string(r.scenario));
  ScenarioContext& sc = it->second;

  const auto ego = j.at("ego").get<std::vector<double>>();
  if (ego.size() != 7) throw std::runtime_error("ego needs 7 values");
  auto& e = r.scene.ego;
  e.position = {ego[0], ego[1]};
  e.heading = ego[2];
  e.speed = ego[3];
  e.acceleration = ego[4];
  e.steering_angle = ego[5];
  e.wheelbase = ego[6];
  r.scene.timestamp = r.time;
  for (const auto& a : j.at("agents")) r.scene.agents.push_back(world::parse_agent_fields(a.get<std::string>()));

  const json& lights = j.at("lights");
  const std::string key = lights.dump();
  auto& map = sc.maps[key];
  if (!map) {
    auto elements = sc.scenario.map;
    for (auto& m : elements) {
      if (auto* l = std::get_if<world::TrafficLight>(&m)) {
        if (!lights.contains(l->id)) throw std::runtime_error("missing state for light " + l->id);
        const std::string s = lights.at(l->id);
        if (s != "red" && s != "green") throw std::runtime_error("bad light state '" + s + "'");
        l->state = s == "red" ? world::LightState::red : world::LightState::green;
      }
    }
    map = std::make_shared<const std::vector<world::MapElement>>(std::move(elements));
  }
  r.scene.map = map;
  r.scene.route = sc.route;

  r.expert_future.dt = j.at("expert_dt");
  for (const auto& w : j.at("expert")) {
    const auto v = w.get<std::vector<double>>();
    if (v.size() != 4) throw std::runtime_error("expert waypoint needs 4 values");
    r.expert_future.waypoints.push_back({v[0], v[1], v[2], v[3]});
  }
  r.candidates = trajgen::generate_candidates(r.scene, header.trajgen);
  const int k = static_cast<int>(r.candidates.size());
  if (r.expert_future.waypoints.size() != r.candidates.candidates.front().waypoints.size() ||
      r.expert_future.dt != header.trajgen.dt)
    throw std::runtime_error("expert future does not match the candidate horizon");
  for (const auto& [tag, lj] : j.at("labels").items()) {
    const auto schema = cwnet::ConceptSchema::by_tag(tag);
    r.labels[tag] = labels_from(lj, schema, k);
  }
  if (!j.at("blackbox").is_null()) {
    const int c = j.at("blackbox");
    if (c < 0 || c >= k) throw std::runtime_error("blackbox choice out of range");
    r.blackbox_choice = c;
  }
  r.holdout = j.at("holdout");
  return r;
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) throw DatasetFormatError(1, "missing dataset header");
  {
    const std::string magic = "#cdrive-dataset ";
    if (line.rfind(magic, 0) != 0) throw DatasetFormatError(1, "not a cdrive dataset");
    std::istringstream hs(line.substr(magic.size()));
    int version = 0;
    if (!(hs >> version) || version != 1) throw DatasetFormatError(1, "unsupported dataset version");
    std::string rest;
    std::getline(hs, rest);
    try {
      const json h = json::parse(rest);
      ds.header.version = version;
      ds.header.seed = h.at("seed").get<std::uint64_t>();
      ds.header.suite = h.at("suite");
      ds.header.holdout_fraction = h.at("holdout_fraction");
      ds.header.trajgen = trajgen_from(h.at("trajgen"));
    } catch (const std::exception& e) {
      throw DatasetFormatError(1, std::string("bad header: ") + e.what());
    }
  }
  std::map<int, ScenarioContext> ctx;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string kind = j.at("kind");
      if (kind == "scenario") {
        const int id = j.at("id");
        std::istringstream text(j.at("text").get<std::string>());
        ScenarioContext sc;
        sc.scenario = world::parse_scenario(text);
        sc.route = std::make_shared<const world::Route>(
            world::build_route(sc.scenario.map, sc.scenario.route_lanes, sc.scenario.goal_arclength));
        ds.scenarios[id] = sc.scenario;
        ctx[id] = std::move(sc);
      } else if (kind == "record") {
        ds.records.push_back(record_from(j, ctx, ds.header));
      } else {
        throw std::runtime_error("unknown line kind '" + kind + "'");
      }
    } catch (const DatasetFormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw DatasetFormatError(lineno, e.what());
    }
  }
  return ds;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  return read_dataset(in);
}

}  // namespace cdrive::data
