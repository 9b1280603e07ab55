#pragma once

#include <vector>

#include "cdrive/data/dataset.hpp"
#include "cdrive/eval/metrics.hpp"
#include "cdrive/planner/model.hpp"

namespace cdrive::eval {

/// Concept statistics of the bundle's concept head on the row of each
/// record's black-box choice. Groups are scored one-hot on their argmax,
/// binaries at 0.5. Ranker agreement (causal bundles only) compares the
/// interpretable argmax with the black-box choice. Records need
/// blackbox_choice.
ConceptReport evaluate_concepts(const planner::ModelBundle& bundle,
                                const std::vector<const data::DatasetRecord*>& records, bool rank_agreement = true,
                                bool parallel = true);

}  // namespace cdrive::eval
