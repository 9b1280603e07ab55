#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cdrive/ad/adam.hpp"
#include "cdrive/planner/planner.hpp"

namespace cdrive::cwnet {

/// Rows are candidates; columns follow ConceptSchema::names().
struct ConceptVector {
  ad::Matrix logits;
  ad::Matrix activations;  // softmax per group, sigmoid per binary
};

ConceptVector activate(const ad::Matrix& logits, const ConceptSchema& schema);
ad::Var activate(ad::Var logits, const ConceptSchema& schema);

/// C(z) for every row of z. Throws std::invalid_argument when the bundle has
/// no concept head for `schema`.
ConceptVector classify_concepts(const planner::ModelBundle& bundle, const ad::Matrix& z, const ConceptSchema& schema);

struct FocalValue {
  double factor = 1.0;  // (1 - p)^gamma
  double loss = 0.0;    // factor * -ln p
  bool clamped = false;
};

/// Focal modulation of -ln(p_t). p_t = 0 is clamped to 1e-12 with a warning
/// on stderr. Throws std::invalid_argument outside [0, 1].
FocalValue focal_scale(double p_t, double gamma);

struct LossReport {
  double concept_loss = 0.0;
  double trajectory_loss = 0.0;
  double total = 0.0;
  std::map<std::string, double> per_concept;  // group name or binary name -> mean term over candidates
};

/// Mean over candidates of 1/2 (mean group cross-entropy + mean binary
/// cross-entropy), each term focal-modulated. A schema without groups
/// contributes 0 for the group part. Throws on label/shape mismatch.
double concept_loss(const ad::Matrix& logits, const ConceptLabels& labels, const ConceptSchema& schema,
                    double gamma = 0.0, std::map<std::string, double>* per_concept = nullptr);
inline double concept_loss(const ConceptVector& pred, const ConceptLabels& labels, const ConceptSchema& schema,
                           double gamma = 0.0) {
  return concept_loss(pred.logits, labels, schema, gamma);
}
/// Same loss recorded on a tape.
ad::Var concept_loss(ad::Var logits, const ConceptLabels& labels, const ConceptSchema& schema, double gamma = 0.0);

/// L_total = (L_concept + L_trajectory) / 2. Throws on non-finite parts.
LossReport joint_loss(double concept_part, double trajectory_part);

enum class Mode { causal, parallel };
Mode mode_from_string(const std::string& s);
const char* to_string(Mode m);

struct InterpretableRanking {
  planner::Ranking ranking;
  ConceptVector concepts;  // every candidate
  ConceptVector chosen;    // row of the chosen candidate
};

/// r'_i = R'(c_i) from the concept logits alone; lowest-index tie-break.
InterpretableRanking rank_interpretable(const planner::ModelBundle& bundle, const world::SceneContext& scene,
                                        const std::vector<trajgen::Trajectory>& candidates);
InterpretableRanking select_trajectory_interpretable(const planner::ModelBundle& bundle,
                                                     const world::SceneContext& scene,
                                                     const trajgen::TrajGenParams& params = {});
/// Parallel variant: the original R drives, C only explains.
InterpretableRanking rank_parallel(const planner::ModelBundle& bundle, const world::SceneContext& scene,
                                   const std::vector<trajgen::Trajectory>& candidates);

struct CwTrainConfig {
  int epochs = 100;
  int batch_size = 32;
  ad::AdamConfig adam{2e-3};
  double concept_gamma = 2.0;
  double trajectory_gamma = 0.0;
  bool soft_labels = false;  // distil the black-box reward softmax instead of its argmax
  std::uint64_t seed = 0;
  bool parallel = true;
};

struct CwTrainReport {
  std::uint64_t frozen_checksum_before = 0;
  std::uint64_t frozen_checksum_after = 0;
  std::vector<LossReport> epochs;  // training means
  long steps = 0;
};

/// Pair embeddings of every record's candidates under the (frozen) encoder.
std::vector<ad::Matrix> cache_embeddings(const planner::ModelBundle& bundle,
                                         const std::vector<const data::DatasetRecord*>& records, bool parallel = true);

/// Trains C and R' (causal) or C alone (parallel) on top of the frozen
/// black box. Causal mode needs every record's blackbox_choice. Throws
/// std::logic_error if any frozen array changed.
planner::ModelBundle train_cwnet(const planner::ModelBundle& blackbox,
                                 const std::vector<const data::DatasetRecord*>& records, const ConceptSchema& schema,
                                 Mode mode, const CwTrainConfig& cfg = {}, CwTrainReport* report = nullptr,
                                 const std::function<void(int epoch, const LossReport&)>& progress = {});

/// Interpretable argmax per record from cached embeddings.
std::vector<int> interpretable_choices(const planner::ModelBundle& bundle, const std::vector<ad::Matrix>& z,
                                       bool parallel = true);

struct Explanation {
  std::vector<std::string> names;
  std::vector<int> percentages;  // schema order
  std::string top_concept;
  std::string action;  // stop | slow down | proceed
  std::string sentence;
};

/// Percentage of an activation: nearest integer, half away from zero.
int to_percentage(double activation);

/// `activations` is the chosen candidate's row. The top concept is the most
/// active scene concept at or above 0.5, falling back to the most active
/// concept overall; the action compares the plan's terminal speed with the
/// current speed.
Explanation render_explanation(const ad::Matrix& activations, const planner::Ranking& ranking,
                               const ConceptSchema& schema, double current_speed);

}  // namespace cdrive::cwnet
