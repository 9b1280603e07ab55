#include <gtest/gtest.h>

#include <sstream>

#include "cdrive/data/labeler.hpp"
#include "cdrive/harness/catalog.hpp"
#include "cdrive/harness/config.hpp"
#include "cdrive/harness/sim.hpp"
#include "cdrive/harness/telemetry.hpp"

using namespace cdrive;
using namespace cdrive::harness;
using nlohmann::json;

namespace {

planner::ModelDims small_dims() {
  planner::ModelDims d;
  d.object_hidden = d.scene = d.gru = d.z = d.reward_hidden = 8;
  d.fuse = 16;
  d.concept_hidden = 16;
  d.concept_reward_hidden = 8;
  return d;
}

const planner::ModelBundle& blackbox() {
  static const auto b = planner::make_bundle(3, {}, small_dims());
  return b;
}

const planner::ModelBundle& with_concepts() {
  static const auto b = [] {
    auto b = planner::make_bundle(3, {}, small_dims());
    planner::attach_concept_heads(b, cwnet::ConceptSchema::dataset1(), 4);
    return b;
  }();
  return b;
}

SimConfig short_run(double duration, PlannerMode mode = PlannerMode::blackbox) {
  SimConfig c;
  c.duration = duration;
  c.mode = mode;
  return c;
}

}  // namespace

TEST(Commands, WireRoundTrip) {
  world::Agent cone;
  cone.id = "c9";
  cone.category = world::AgentCategory::cone;
  cone.pose = {12.5, -1.0, 0.25};
  cone.length = cone.width = 0.4;
  const std::vector<OperatorCommand> all{Engage{},
                                         Disengage{},
                                         SetControl{0.5, -0.1},
                                         TeleportEgo{{1, 2, 0.3}, 1.5},
                                         SpawnObject{cone},
                                         RemoveObject{"c9"},
                                         SetLight{"T0", world::LightState::green}};
  for (const auto& c : all) {
    const auto j = command_to_json(c);
    EXPECT_EQ(command_to_json(command_from_json(j)), j) << j.dump();
  }
  EXPECT_THROW(command_from_json(json{{"kind", "fly"}}), CommandError);
  EXPECT_THROW(command_from_json(json{{"kind", "set_control"}, {"acceleration", 1.0}}), CommandError);
  EXPECT_THROW(command_from_json(json{{"kind", "set_light"}, {"id", "T0"}, {"state", "blue"}}), CommandError);
  EXPECT_THROW(command_from_json(json::array()), CommandError);
}

TEST(Commands, ScriptRoundTrip) {
  const CommandScript s{{0, RemoveObject{"cone0"}}, {3, Disengage{}}, {3, SetControl{1.0, 0.0}}};
  std::stringstream io;
  write_script(io, s);
  const auto text = io.str();
  const auto back = read_script(io);
  std::stringstream again;
  write_script(again, back);
  EXPECT_EQ(again.str(), text);
  std::istringstream bad("{\"tick\": 5, \"kind\": \"engage\"}\n{\"tick\": 2, \"kind\": \"engage\"}\n");
  EXPECT_THROW(read_script(bad), CommandError);
}

TEST(Simulator, EmptyScenarioTenSecondsIsTwentyTicks) {
  const auto log = run_closed_loop(catalog_scenario("empty"), blackbox(), short_run(10.0));
  ASSERT_EQ(log.ticks.size(), 20u);
  for (std::size_t i = 0; i < log.ticks.size(); ++i) {
    EXPECT_EQ(log.ticks[i].tick, int(i));
    EXPECT_DOUBLE_EQ(log.ticks[i].time, i * 0.5);
    EXPECT_EQ(log.ticks[i].mode, AutonomyMode::self_driving);
    EXPECT_TRUE(log.ticks[i].chosen_index.has_value());
    EXPECT_TRUE(log.ticks[i].rewards.has_value());
  }
}

TEST(Simulator, DisengageThenSetControl) {
  Simulator sim(catalog_scenario("empty"), blackbox(), short_run(5.0));
  sim.step();
  EXPECT_FALSE(sim.apply(SetControl{1.0, 0.0}).ok);  // still engaged
  ASSERT_TRUE(sim.apply(Disengage{}).ok);
  ASSERT_TRUE(sim.apply(SetControl{1.0, 0.0}).ok);
  const auto v0 = sim.world().ego().speed;
  const auto& t = sim.step();
  EXPECT_EQ(t.mode, AutonomyMode::manual);
  EXPECT_FALSE(t.chosen_index);
  EXPECT_TRUE(t.plan.waypoints.empty());
  EXPECT_EQ(t.commands.size(), 2u);
  EXPECT_DOUBLE_EQ(t.control.acceleration, 1.0);
  EXPECT_NEAR(sim.world().ego().speed, v0 + 0.5, 1e-9);
}

TEST(Simulator, UnknownIdRejectedWorldUnchanged) {
  Simulator sim(catalog_scenario("cone_phantom"), blackbox(), short_run(5.0));
  const auto before = scene_digest(world::build_scene(sim.world()));
  const auto ack = sim.apply(RemoveObject{"ghost"});
  EXPECT_FALSE(ack.ok);
  EXPECT_NE(ack.message.find("ghost"), std::string::npos);
  EXPECT_FALSE(sim.apply(SetLight{"nope", world::LightState::red}).ok);
  EXPECT_EQ(scene_digest(world::build_scene(sim.world())), before);
  EXPECT_TRUE(sim.step().commands.empty());
  EXPECT_TRUE(sim.apply(RemoveObject{"cone0"}).ok);
  EXPECT_TRUE(sim.world().agents().empty());
}

TEST(Simulator, TeleportBesideParkedRowFlipsClose) {
  Simulator sim(catalog_scenario("parked_row_pudo"), blackbox(), short_run(5.0));
  ASSERT_TRUE(sim.apply(Disengage{}).ok);
  ASSERT_TRUE(sim.apply(TeleportEgo{{40.0, 0.0, 0.0}, 0.0}).ok);
  sim.step();
  EXPECT_TRUE(data::scene_facts(world::build_scene(sim.world())).close);
  // Parked row centers sit at y = -3.3; 5 m to the left leaves a 3.2 m gap.
  ASSERT_TRUE(sim.apply(TeleportEgo{{40.0, -3.3 + 5.0, 0.0}, 0.0}).ok);
  sim.step();
  EXPECT_FALSE(data::scene_facts(world::build_scene(sim.world())).close);
}

TEST(Simulator, ManualDriveStillBackstopped) {
  auto s = catalog_scenario("empty");
  s.ego.speed = 5.0;
  s.agents.push_back({});
  auto& wall = s.agents.back();
  wall.id = "box";
  wall.pose = {8.0, 0.0, 0.0};
  Simulator sim(s, blackbox(), short_run(5.0));
  ASSERT_TRUE(sim.apply(Disengage{}).ok);
  ASSERT_TRUE(sim.apply(SetControl{0.0, 0.0}).ok);
  const auto& t = sim.step();
  EXPECT_TRUE(t.backstop);
  EXPECT_LT(t.control.acceleration, 0.0);
}

TEST(Simulator, PlannerFailureIsLoggedAndStops) {
  // A scene with no route anchor near the ego makes candidate generation fail.
  auto s = catalog_scenario("empty");
  s.ego.position = {60.0, 80.0};
  s.ego.speed = 2.0;
  Simulator sim(s, blackbox(), short_run(2.0));
  const auto& t = sim.step();
  EXPECT_FALSE(t.error.empty());
  EXPECT_FALSE(t.chosen_index);
  EXPECT_LT(t.control.acceleration, 0.0);
}

TEST(Simulator, ReplayIsByteExact) {
  const auto scn = catalog_scenario("cone_phantom");
  const auto cfg = short_run(6.0, PlannerMode::cwnet_causal);
  Simulator live(scn, with_concepts(), cfg);
  live.step();
  ASSERT_TRUE(live.apply(Disengage{}).ok);
  ASSERT_TRUE(live.apply(SetControl{-0.5, 0.05}).ok);
  live.step();
  live.step();
  ASSERT_TRUE(live.apply(RemoveObject{"cone0"}).ok);
  ASSERT_TRUE(live.apply(Engage{}).ok);
  while (!live.finished()) live.step();
  const auto original = format_drive_log(live.log());
  const auto replay = run_closed_loop(scn, with_concepts(), cfg, script_from_log(live.log()));
  EXPECT_EQ(format_drive_log(replay), original);
  EXPECT_EQ(live.log().ticks[1].mode, AutonomyMode::manual);
  EXPECT_EQ(live.log().ticks[3].commands.size(), 2u);
}

TEST(Simulator, ConceptModesLogExplanations) {
  const auto log = run_closed_loop(catalog_scenario("parked_row_pudo"), with_concepts(),
                                   short_run(2.0, PlannerMode::cwnet_parallel));
  ASSERT_EQ(log.concept_names.size(), cwnet::ConceptSchema::dataset1().names().size());
  for (const auto& t : log.ticks) {
    ASSERT_EQ(t.activations.size(), log.concept_names.size());
    ASSERT_EQ(t.percentages.size(), log.concept_names.size());
    EXPECT_EQ(t.explanation.rfind("I chose to ", 0), 0u);
    for (std::size_t i = 0; i < t.activations.size(); ++i)
      EXPECT_EQ(t.percentages[i], cwnet::to_percentage(t.activations[i]));
  }
  EXPECT_THROW(Simulator(catalog_scenario("empty"), blackbox(), short_run(1.0, PlannerMode::cwnet_causal)),
               std::invalid_argument);
}

TEST(Telemetry, MapOnFirstSnapshotAndOnChange) {
  Simulator sim(catalog_scenario("empty"), blackbox(), short_run(3.0));
  TelemetryStream stream;
  const auto first = stream.next(sim);
  EXPECT_EQ(first["type"], "snapshot");
  EXPECT_TRUE(first.contains("map"));
  EXPECT_TRUE(first["tick"].is_null());
  sim.step();
  const auto second = stream.next(sim);
  EXPECT_FALSE(second.contains("map"));
  EXPECT_EQ(second["tick"], 0);
  EXPECT_EQ(second["mode"], "self_driving");
  EXPECT_FALSE(second["trajectory"].empty());
  EXPECT_EQ(hello_message(sim)["type"], "hello");
  EXPECT_EQ(ack_message(4, "engage", 2)["seq"], 4);
  EXPECT_EQ(error_message(std::nullopt, "x")["type"], "error");
}

TEST(Telemetry, PercentagesRoundHalfAway) {
  EXPECT_EQ(cwnet::to_percentage(0.873), 87);
  EXPECT_EQ(cwnet::to_percentage(0.875), 88);
  EXPECT_EQ(cwnet::to_percentage(0.005), 1);
  EXPECT_EQ(cwnet::to_percentage(0.0), 0);
  Simulator sim(catalog_scenario("empty"), with_concepts(), short_run(1.0, PlannerMode::cwnet_causal));
  sim.step();
  const auto snap = snapshot_message(sim, false);
  const auto& t = sim.log().ticks.back();
  ASSERT_EQ(snap["concepts"].size(), t.percentages.size());
  for (std::size_t i = 0; i < t.percentages.size(); ++i) EXPECT_EQ(snap["concepts"][i]["percent"], t.percentages[i]);
}

TEST(Catalog, NamesResolveAndSeedsJitter) {
  for (const auto& n : catalog_names()) EXPECT_EQ(catalog_scenario(n).name, n);
  EXPECT_EQ(catalog_scenario("nominal/3", 5).name, "nominal/3");
  EXPECT_THROW(catalog_scenario("nowhere"), std::invalid_argument);
  EXPECT_THROW(resolve_scenario("/no/such/file.scn"), std::invalid_argument);
  const auto a = catalog_scenario("cyclist_unseen", 1), b = catalog_scenario("cyclist_unseen", 2);
  EXPECT_NE(a.agents[0].pose.x, b.agents[0].pose.x);
  EXPECT_EQ(nominal_suite(3, 1).size(), 3u);
}

TEST(Config, ParsesAndRejectsUnknownKeys) {
  std::istringstream in("# comment\nsim.duration = 12.5\nsim.backstop = off\ncwnet.epochs=7 # trailing\n");
  auto cfg = Config::parse(in);
  Settings s;
  apply(cfg, s);
  EXPECT_DOUBLE_EQ(s.sim.duration, 12.5);
  EXPECT_FALSE(s.sim.backstop);
  EXPECT_EQ(s.cwnet.epochs, 7);

  std::istringstream bad("sim.durration = 3\n");
  auto c2 = Config::parse(bad);
  Settings s2;
  EXPECT_THROW(apply(c2, s2), ConfigError);
  std::istringstream junk("sim.dt = fast\n");
  auto c3 = Config::parse(junk);
  EXPECT_THROW(apply(c3, s2), ConfigError);
  std::istringstream noeq("just words\n");
  EXPECT_THROW(Config::parse(noeq), ConfigError);
}

TEST(Config, FormatRoundTrips) {
  Settings s;
  s.sim.duration = 17.25;
  s.gen.suite = "turns";
  std::istringstream in(format_settings(s));
  auto cfg = Config::parse(in);
  Settings back;
  apply(cfg, back);
  EXPECT_EQ(format_settings(back), format_settings(s));
}
