#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cdrive/trajgen/trajectory.hpp"
#include "cdrive/world/geometry.hpp"

namespace cdrive::world {

struct VehicleLimits {
  double max_steer = 0.6;      // rad
  double max_accel = 3.0;      // m/s^2
  double max_decel = 6.0;      // m/s^2, actuation limit (not the backstop rule)
  double ego_length = 4.5;     // m
  double ego_width = 1.8;      // m
};

/// Reference point is the rear axle; the footprint center sits half a
/// wheelbase ahead of it.
struct EgoState {
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  double acceleration = 0.0;
  double steering_angle = 0.0;
  double wheelbase = 2.5;

  Pose pose() const { return {position.x, position.y, heading}; }
};

OrientedBox ego_footprint(const EgoState& ego, const VehicleLimits& limits);
OrientedBox ego_front_half(const EgoState& ego, const VehicleLimits& limits);

struct Control {
  double acceleration = 0.0;
  double steering = 0.0;
};

/// Kinematic bicycle step. Speed is clamped at zero from below; the
/// integration is exact for straight motion.
EgoState step_ego(const EgoState& state, const Control& control, double dt,
                  const VehicleLimits& limits = {});

enum class AgentCategory { vehicle = 0, cyclist = 1, pedestrian = 2, cone = 3 };
inline constexpr int kNumCategories = 4;

const char* to_string(AgentCategory c);
AgentCategory category_from_string(const std::string& s);

enum class ScriptKind { stationary, follow_path, follow_lead };

struct AgentScript {
  ScriptKind kind = ScriptKind::stationary;
  std::vector<Vec2> path;   // follow_path / follow_lead
  double cruise_speed = 0.0;
  std::string lead_id;      // follow_lead only
  double min_gap = 4.0;     // follow_lead only, center-to-center along the path
  double start_delay = 0.0; // seconds before the agent starts moving
};

struct Agent {
  std::string id;
  AgentCategory category = AgentCategory::vehicle;
  Pose pose;
  double speed = 0.0;
  double length = 4.5;
  double width = 1.8;
  AgentScript script;
  double path_progress = 0.0;  // arclength along script.path

  OrientedBox footprint() const { return {pose.position(), pose.heading, length, width}; }
};

enum class LightState { red, green };

struct Lane {
  std::string id;
  std::vector<Vec2> centerline;
  double width = 3.5;
};

struct IntersectionArea {
  std::string id;
  std::vector<Vec2> polygon;
};

struct StopSign {
  std::string id;
  Vec2 position;
  Vec2 stop_line_a;
  Vec2 stop_line_b;
};

struct LightCycle {
  double red = 10.0;
  double green = 10.0;
  double offset = 0.0;
};

struct TrafficLight {
  std::string id;
  Vec2 position;
  Vec2 stop_line_a;
  Vec2 stop_line_b;
  LightState state = LightState::red;
  std::optional<LightCycle> cycle;
};

struct PudoZone {
  std::string id;
  std::vector<Vec2> polygon;
};

using MapElement = std::variant<Lane, IntersectionArea, StopSign, TrafficLight, PudoZone>;

const std::string& element_id(const MapElement& e);
void validate(const MapElement& e);

/// Ordered lane sequence stitched into one centerline.
struct Route {
  std::vector<std::string> lane_ids;
  double goal_arclength = 0.0;
  Centerline centerline;
  double lane_width = 3.5;

  double length() const { return centerline.length(); }
};

/// Lanes must connect end-to-start within 1 cm.
Route build_route(const std::vector<MapElement>& map, const std::vector<std::string>& lane_ids,
                  double goal_arclength);

struct SceneContext {
  double timestamp = 0.0;
  EgoState ego;
  std::vector<Agent> agents;
  std::shared_ptr<const std::vector<MapElement>> map;
  std::shared_ptr<const Route> route;
  int map_version = 0;
};

/// Which agent categories the planner's perception features carry.
struct FeatureSchema {
  std::array<bool, kNumCategories> categories{true, true, true, true};

  bool includes(AgentCategory c) const { return categories[static_cast<int>(c)]; }
  static FeatureSchema without(AgentCategory c) {
    FeatureSchema s;
    s.categories[static_cast<int>(c)] = false;
    return s;
  }
  bool operator==(const FeatureSchema&) const = default;
};

struct Scenario {
  std::string name = "unnamed";
  EgoState ego;
  std::vector<Agent> agents;
  std::vector<MapElement> map;
  std::vector<std::string> route_lanes;
  double goal_arclength = -1.0;  // negative: end of route
  double duration = 30.0;
};

/// Single authoritative world. Snapshots handed out via build_scene are
/// immutable values.
class World {
 public:
  explicit World(const Scenario& scenario, VehicleLimits limits = {});

  double time() const { return time_; }
  const EgoState& ego() const { return ego_; }
  const std::vector<Agent>& agents() const { return agents_; }
  const std::shared_ptr<const std::vector<MapElement>>& map() const { return map_; }
  const std::shared_ptr<const Route>& route() const { return route_; }
  const VehicleLimits& limits() const { return limits_; }
  int map_version() const { return map_version_; }

  /// Advances ego and scripted agents by dt.
  void step(const Control& control, double dt);

  void set_ego(const EgoState& ego) { ego_ = ego; }
  const Agent* find_agent(const std::string& id) const;
  /// Returns false when the id does not exist.
  bool remove_agent(const std::string& id);
  /// Throws std::invalid_argument on duplicate id.
  void spawn_agent(Agent agent);
  /// Overrides the schedule of a light; returns false for an unknown id.
  bool set_light(const std::string& id, LightState state);

 private:
  void advance_agents(double dt);
  void update_lights();

  double time_ = 0.0;
  EgoState ego_;
  std::vector<Agent> agents_;
  std::shared_ptr<const std::vector<MapElement>> map_;
  std::shared_ptr<const Route> route_;
  VehicleLimits limits_;
  int map_version_ = 0;
};

/// Deterministic snapshot. Agents are sorted by distance to the ego, then id;
/// categories outside `schema` are dropped.
SceneContext build_scene(const World& world, const FeatureSchema& schema = {});

enum class OverrideDecision { none, emergency_stop };

struct BackstopParams {
  double max_brake = 4.0;       // m/s^2
  double inflation = 0.3;       // m
  double lookahead_margin = 0.5;  // s, added to time-to-stop
  double sample_spacing = 0.25;   // m
};

/// Rule-based override. Uses ground-truth agents only.
OverrideDecision backstop_check(const SceneContext& scene, const trajgen::Trajectory& planned,
                                const BackstopParams& params = {},
                                const VehicleLimits& limits = {});

struct CollisionStatus {
  bool any = false;
  bool at_fault = false;
  std::string agent_id;
};

/// At fault: the ego front half overlaps an agent while ego speed > 0.1 m/s.
CollisionStatus check_collision(const EgoState& ego, const std::vector<Agent>& agents,
                                const VehicleLimits& limits = {});

// Scenario definition files: one `kind key=value ...` record per line.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);
void write_scenario(std::ostream& out, const Scenario& scenario);
/// Parses the tail of an `agent` line (tokens after the kind).
Agent parse_agent_fields(const std::string& fields);
std::string format_agent_fields(const Agent& agent);

}  // namespace cdrive::world
