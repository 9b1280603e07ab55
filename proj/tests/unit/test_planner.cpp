#include <gtest/gtest.h>

#include <cstdio>
#include <sstream>

#include "cdrive/cwnet/cwnet.hpp"
#include "cdrive/data/dataset.hpp"
#include "cdrive/harness/catalog.hpp"
#include "cdrive/planner/planner.hpp"

using namespace cdrive;
using namespace cdrive::planner;

namespace {

ModelDims tiny() {
  ModelDims d;
  d.object_hidden = d.scene = d.gru = d.z = d.reward_hidden = 8;
  d.fuse = d.concept_hidden = 16;
  d.concept_reward_hidden = 8;
  return d;
}

const data::Dataset& corpus() {
  static const auto ds = [] {
    data::GenerateConfig g;
    g.suite = "full";
    g.seed = 11;
    g.n_records = 48;
    g.record_stride = 4;
    g.trajgen.speed_samples = 4;
    g.trajgen.lateral_samples = 3;
    return data::generate_dataset(g);
  }();
  return ds;
}

std::vector<const data::DatasetRecord*> all_records() {
  std::vector<const data::DatasetRecord*> out;
  for (const auto& r : corpus().records) out.push_back(&r);
  return out;
}

}  // namespace

TEST(Planner, ArgmaxLowestIndexTieBreak) {
  EXPECT_EQ(argmax_lowest({1, 3, 3, 2}), 1);
  EXPECT_EQ(argmax_lowest({-1}), 0);
  EXPECT_THROW(argmax_lowest({}), std::invalid_argument);
}

TEST(Planner, ViewDropsExcludedCategories) {
  const auto scene = world::build_scene(world::World(harness::catalog_scenario("cyclist_unseen")));
  const auto schema = world::FeatureSchema::without(world::AgentCategory::cyclist);
  const auto bundle = make_bundle(1, schema, tiny());
  const auto cands = trajgen::generate_candidates(scene).candidates;
  EXPECT_THROW(embed_candidates(bundle, scene, cands), SchemaMismatch);
  const auto view = planner_view(scene, schema);
  EXPECT_TRUE(view.agents.empty());
  const auto z = embed_candidates(bundle, view, cands);
  EXPECT_EQ(z.rows(), 146);
  EXPECT_EQ(z.cols(), tiny().z);
}

TEST(Planner, FreshRewardHeadIsUniform) {
  const auto scene = world::build_scene(world::World(harness::catalog_scenario("empty")));
  const auto r = select_trajectory(make_bundle(2, {}, tiny()), scene);
  ASSERT_EQ(r.rewards.size(), 146u);
  for (double v : r.rewards) EXPECT_EQ(v, r.rewards[0]);
  EXPECT_EQ(r.chosen_index, 0);
}

TEST(Planner, ExpertLabelIsNearestCandidate) {
  trajgen::Trajectory a, b, e;
  a.waypoints = {{0, 0, 0, 1}, {1, 0, 0, 1}};
  b.waypoints = {{0, 1, 0, 1}, {1, 1, 0, 1}};
  e.waypoints = {{0, 0.8, 0, 1}, {1, 0.9, 0, 1}};
  EXPECT_EQ(expert_label({a, b}, e), 1);
  EXPECT_EQ(expert_label({a, a}, e), 0);
}

TEST(Planner, TrainingReducesLossAndRespectsFreeze) {
  auto bundle = make_bundle(3, {}, tiny());
  attach_concept_heads(bundle, cwnet::ConceptSchema::dataset1(), 4);
  const auto concepts_before = bundle.checksum({"C", "Rp"});
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.adam.learning_rate = 3e-3;
  TrainReport rep;
  const auto trained = train_blackbox(all_records(), bundle, cfg, &rep);
  ASSERT_EQ(rep.epoch_loss.size(), 3u);
  EXPECT_LT(rep.epoch_loss.back(), rep.initial_loss);
  EXPECT_EQ(trained.checksum({"C", "Rp"}), concepts_before);
  EXPECT_NE(trained.checksum({"H", "E", "R"}), bundle.checksum({"H", "E", "R"}));
  EXPECT_THROW(train_blackbox({}, bundle, cfg), std::invalid_argument);
}

TEST(Planner, SerialAndParallelChoicesAgree) {
  auto bundle = train_blackbox(all_records(), make_bundle(5, {}, tiny()), {});
  EXPECT_EQ(blackbox_choices(bundle, all_records(), false), blackbox_choices(bundle, all_records(), true));
  EXPECT_EQ(label_accuracy(bundle, all_records(), false), label_accuracy(bundle, all_records(), true));
}

TEST(Planner, BundleFileRoundTrip) {
  auto bundle = make_bundle(6, world::FeatureSchema::without(world::AgentCategory::cone), tiny());
  attach_concept_heads(bundle, cwnet::ConceptSchema::dataset2(), 7);
  const std::string path = ::testing::TempDir() + "bundle_roundtrip.bundle";
  save_bundle(bundle, path);
  const auto back = load_bundle(path);
  std::remove(path.c_str());
  EXPECT_EQ(back.dims, bundle.dims);
  EXPECT_EQ(back.schema, bundle.schema);
  EXPECT_EQ(back.concept_tag, "dataset2");
  EXPECT_EQ(back.checksum({"H", "E", "R", "C", "Rp"}), bundle.checksum({"H", "E", "R", "C", "Rp"}));
  EXPECT_THROW(load_bundle("/no/such.bundle"), std::runtime_error);
}

TEST(CwNet, FrozenEncoderInBothModes) {
  auto ds = corpus();
  const auto bb = train_blackbox(all_records(), make_bundle(8, {}, tiny()), {});
  fill_blackbox_choices(bb, ds);
  std::vector<const data::DatasetRecord*> recs;
  for (const auto& r : ds.records) recs.push_back(&r);
  cwnet::CwTrainConfig cfg;
  cfg.epochs = 2;
  for (auto mode : {cwnet::Mode::causal, cwnet::Mode::parallel}) {
    cwnet::CwTrainReport rep;
    const auto cw = cwnet::train_cwnet(bb, recs, cwnet::ConceptSchema::dataset1(), mode, cfg, &rep);
    EXPECT_EQ(rep.frozen_checksum_before, rep.frozen_checksum_after);
    EXPECT_EQ(cw.checksum({"H", "E", "R"}), bb.checksum({"H", "E", "R"}));
    EXPECT_TRUE(cw.has_concepts());
    ASSERT_EQ(rep.epochs.size(), 2u);
    EXPECT_LT(rep.epochs.back().concept_loss, rep.epochs.front().concept_loss);
    const auto z = cwnet::cache_embeddings(cw, recs);
    EXPECT_EQ(cwnet::interpretable_choices(cw, z, false), cwnet::interpretable_choices(cw, z, true));
  }
}

TEST(CwNet, CausalNeedsBlackboxChoices) {
  const auto bb = make_bundle(9, {}, tiny());
  EXPECT_THROW(cwnet::train_cwnet(bb, all_records(), cwnet::ConceptSchema::dataset1(), cwnet::Mode::causal),
               std::invalid_argument);
}
