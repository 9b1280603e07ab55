#include "cdrive/planner/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cdrive/kernels/batch.hpp"

namespace cdrive::planner {

int argmax_lowest(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("argmax of an empty list");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

world::SceneContext planner_view(const world::SceneContext& scene, const world::FeatureSchema& schema) {
  world::SceneContext out = scene;
  out.agents.clear();
  for (const auto& a : scene.agents)
    if (schema.includes(a.category)) out.agents.push_back(a);
  return out;
}

namespace {

ad::Var pair_z(ad::Tape& tape, const ModelBundle& bundle, const world::SceneContext& scene,
               const std::vector<trajgen::Trajectory>& candidates) {
  const ad::Var h = scene_embedding(tape, bundle, scene_features(scene, bundle.schema));
  return pair_embeddings(tape, bundle, h, trajectory_sequence(candidates, scene.ego));
}

}  // namespace

ad::Matrix embed_candidates(const ModelBundle& bundle, const world::SceneContext& scene,
                            const std::vector<trajgen::Trajectory>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to embed");
  ad::Tape tape;
  return pair_z(tape, bundle, scene, candidates).value();
}

ad::Matrix embed(const ModelBundle& bundle, const world::SceneContext& scene, const trajgen::Trajectory& tau) {
  return embed_candidates(bundle, scene, {tau});
}

Ranking rank_candidates(const ModelBundle& bundle, const world::SceneContext& scene,
                        const std::vector<trajgen::Trajectory>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to rank");
  ad::Tape tape;
  const ad::Matrix r = rewards(tape, bundle, pair_z(tape, bundle, scene, candidates)).value();
  Ranking out;
  out.rewards.assign(r.data(), r.data() + r.size());
  out.chosen_index = argmax_lowest(out.rewards);
  out.chosen = candidates[out.chosen_index];
  return out;
}

Ranking select_trajectory(const ModelBundle& bundle, const world::SceneContext& scene,
                          const trajgen::TrajGenParams& params) {
  return rank_candidates(bundle, scene, trajgen::generate_candidates(scene, params).candidates);
}

int expert_label(const std::vector<trajgen::Trajectory>& candidates, const trajgen::Trajectory& expert) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to label");
  int best = 0;
  double best_d = trajgen::average_l2(candidates[0], expert);
  for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
    const double d = trajgen::average_l2(candidates[i], expert);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

ad::Var ranking_loss(ad::Tape& tape, const ModelBundle& bundle, const data::DatasetRecord& record, int label,
                     double focal_gamma) {
  const world::SceneContext scene = planner_view(record.scene, bundle.schema);
  const ad::Var z = pair_z(tape, bundle, scene, record.candidates.candidates);
  return ad::softmax_cross_entropy(rewards(tape, bundle, z), label, focal_gamma);
}

namespace {

kernels::ItemGradient record_gradient(const ModelBundle& bundle, const data::DatasetRecord& r, int label,
                                      double gamma) {
  ad::Tape tape;
  const ad::Var loss = ranking_loss(tape, bundle, r, label, gamma);
  tape.backward(loss);
  return {loss.value()(0, 0), tape.param_gradients()};
}

}  // namespace

ModelBundle train_blackbox(const std::vector<const data::DatasetRecord*>& records, ModelBundle bundle,
                           const TrainConfig& cfg, TrainReport* report,
                           const std::function<void(int, double)>& progress) {
  if (records.empty()) throw std::invalid_argument("train_blackbox: empty dataset");
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw std::invalid_argument("train_blackbox: bad batch size or epochs");
  bundle.set_trainable({"H.obj", "H.scene", "E", "R"});
  const int n = static_cast<int>(records.size());
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = expert_label(records[i]->candidates.candidates, records[i]->expert_future);

  TrainReport local;
  TrainReport& rep = report ? *report : local;
  {
    const auto losses = kernels::map_items<double>(
        n,
        [&](int i) {
          ad::Tape tape;
          return ranking_loss(tape, bundle, *records[i], labels[i], cfg.focal_gamma).value()(0, 0);
        },
        cfg.parallel);
    rep.initial_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / n;
  }

  ad::AdamState state;
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n - start);
      kernels::ItemGradient g = kernels::sum_gradients(
          count,
          [&](int j) {
            const int i = order[start + j];
            return record_gradient(bundle, *records[i], labels[i], cfg.focal_gamma);
          },
          cfg.parallel);
      if (!std::isfinite(g.loss)) throw ad::DivergenceError("non-finite loss in epoch " + std::to_string(epoch));
      for (auto& [name, m] : g.grads) m /= count;
      ad::adam_step(bundle.params, g.grads, state, cfg.adam);
      total += g.loss;
      ++rep.steps;
    }
    rep.epoch_loss.push_back(total / n);
    if (progress) progress(epoch, total / n);
  }
  return bundle;
}

std::vector<int> blackbox_choices(const ModelBundle& bundle, const std::vector<const data::DatasetRecord*>& records,
                                  bool parallel) {
  return kernels::map_items<int>(
      static_cast<int>(records.size()),
      [&](int i) {
        const auto& r = *records[i];
        return rank_candidates(bundle, planner_view(r.scene, bundle.schema), r.candidates.candidates).chosen_index;
      },
      parallel);
}

void fill_blackbox_choices(const ModelBundle& bundle, data::Dataset& ds, bool parallel) {
  std::vector<const data::DatasetRecord*> all;
  for (const auto& r : ds.records) all.push_back(&r);
  const auto c = blackbox_choices(bundle, all, parallel);
  for (std::size_t i = 0; i < c.size(); ++i) ds.records[i].blackbox_choice = c[i];
}

double label_accuracy(const ModelBundle& bundle, const std::vector<const data::DatasetRecord*>& records, bool parallel) {
  if (records.empty()) throw std::invalid_argument("label_accuracy: no records");
  const auto c = blackbox_choices(bundle, records, parallel);
  int hit = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] == expert_label(records[i]->candidates.candidates, records[i]->expert_future)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(records.size());
}

}  // namespace cdrive::planner
