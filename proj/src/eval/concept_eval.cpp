#include "cdrive/eval/concept_eval.hpp"

#include <stdexcept>

#include "cdrive/cwnet/cwnet.hpp"

namespace cdrive::eval {

ConceptReport evaluate_concepts(const planner::ModelBundle& bundle,
                                const std::vector<const data::DatasetRecord*>& records, bool rank_agreement,
                                bool parallel) {
  if (!bundle.has_concepts()) throw std::invalid_argument("evaluate_concepts: bundle has no concept head");
  if (records.empty()) throw std::invalid_argument("evaluate_concepts: no records");
  const auto schema = bundle.concept_schema();
  const auto z = cwnet::cache_embeddings(bundle, records, parallel);
  const int k = schema.logit_count();
  const int nb = static_cast<int>(schema.binaries.size());

  std::vector<std::vector<double>> pred(records.size(), std::vector<double>(k)), truth = pred;
  std::vector<int> blackbox(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = *records[r];
    if (!rec.blackbox_choice) throw std::invalid_argument("evaluate_concepts: record without black-box choice");
    const int row = *rec.blackbox_choice;
    blackbox[r] = row;
    const auto c = cwnet::classify_concepts(bundle, z[r].middleRows(row, 1), schema);
    const auto& labels = rec.labels_for(schema.tag);
    for (std::size_t g = 0; g < schema.groups.size(); ++g) {
      const int start = schema.group_start(static_cast<int>(g));
      const int m = static_cast<int>(schema.groups[g].members.size());
      int best = 0;
      for (int j = 1; j < m; ++j)
        if (c.activations(0, start + j) > c.activations(0, start + best)) best = j;
      pred[r][start + best] = 1.0;
      truth[r][start + labels.group_label(row, static_cast<int>(g))] = 1.0;
    }
    for (int b = 0; b < nb; ++b) {
      pred[r][schema.binary_start() + b] = c.activations(0, schema.binary_start() + b);
      truth[r][schema.binary_start() + b] = labels.binary_label(row, b);
    }
  }
  auto rep = concept_metrics(pred, truth, schema.names());
  if (rank_agreement) rep.ranker_agreement = ranker_agreement(cwnet::interpretable_choices(bundle, z, parallel), blackbox);
  return rep;
}

}  // namespace cdrive::eval
