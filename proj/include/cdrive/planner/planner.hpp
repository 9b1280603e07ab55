#pragma once

#include <functional>
#include <vector>

#include "cdrive/ad/adam.hpp"
#include "cdrive/data/dataset.hpp"
#include "cdrive/planner/model.hpp"

namespace cdrive::planner {

struct Ranking {
  std::vector<double> rewards;
  int chosen_index = -1;
  trajgen::Trajectory chosen;
};

/// Index of the largest value; the lowest index wins ties. Throws on empty input.
int argmax_lowest(const std::vector<double>& values);

/// The scene as the planner perceives it: agents outside `schema` removed.
world::SceneContext planner_view(const world::SceneContext& scene, const world::FeatureSchema& schema);

/// Pair embeddings z (k x dims.z) for the candidates. Throws SchemaMismatch
/// when the scene carries categories the bundle's schema excludes.
ad::Matrix embed_candidates(const ModelBundle& bundle, const world::SceneContext& scene,
                            const std::vector<trajgen::Trajectory>& candidates);
ad::Matrix embed(const ModelBundle& bundle, const world::SceneContext& scene, const trajgen::Trajectory& tau);

/// r_i = R(E(h, tau_i)); argmax with lowest-index tie-break.
Ranking rank_candidates(const ModelBundle& bundle, const world::SceneContext& scene,
                        const std::vector<trajgen::Trajectory>& candidates);
/// Generates candidates for the scene and ranks them.
Ranking select_trajectory(const ModelBundle& bundle, const world::SceneContext& scene,
                          const trajgen::TrajGenParams& params = {});

/// Candidate closest to the expert future by mean displacement (lowest index on ties).
int expert_label(const std::vector<trajgen::Trajectory>& candidates, const trajgen::Trajectory& expert);

struct TrainConfig {
  int epochs = 6;
  int batch_size = 16;
  ad::AdamConfig adam;
  double focal_gamma = 0.0;
  std::uint64_t seed = 0;  // shuffling
  bool parallel = true;
};

struct TrainReport {
  double initial_loss = 0.0;        // mean loss of the starting bundle on the training records
  std::vector<double> epoch_loss;   // mean training loss per epoch
  long steps = 0;
};

/// One record's ranking loss on a tape: softmax cross-entropy (optionally
/// focal) of the candidate rewards against `label`.
ad::Var ranking_loss(ad::Tape& tape, const ModelBundle& bundle, const data::DatasetRecord& record, int label,
                     double focal_gamma);

/// Trains H, E and R of `bundle` towards the expert labels. Other arrays stay
/// frozen. Throws std::invalid_argument on an empty record list and
/// ad::DivergenceError when a loss or gradient turns non-finite.
ModelBundle train_blackbox(const std::vector<const data::DatasetRecord*>& records, ModelBundle bundle,
                           const TrainConfig& cfg = {}, TrainReport* report = nullptr,
                           const std::function<void(int epoch, double loss)>& progress = {});

/// Black-box argmax for each record.
std::vector<int> blackbox_choices(const ModelBundle& bundle, const std::vector<const data::DatasetRecord*>& records,
                                  bool parallel = true);
void fill_blackbox_choices(const ModelBundle& bundle, data::Dataset& ds, bool parallel = true);

/// Fraction of records whose argmax equals the expert label.
double label_accuracy(const ModelBundle& bundle, const std::vector<const data::DatasetRecord*>& records,
                      bool parallel = true);

}  // namespace cdrive::planner
