#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdrive/ad/network.hpp"
#include "cdrive/cwnet/concepts.hpp"
#include "cdrive/planner/features.hpp"

namespace cdrive::planner {

struct ModelDims {
  int object_hidden = 32;
  int scene = 32;    // h
  int gru = 32;
  int fuse = 64;
  int z = 32;        // z_i
  int reward_hidden = 32;
  int concept_hidden = 64;
  int concept_reward_hidden = 64;
  bool operator==(const ModelDims&) const = default;
};

/// Parameters of H, E, R and, once attached, the concept head C and the
/// concept reward R'. Arrays are prefixed "H.obj", "H.scene", "E", "R",
/// "C", "Rp".
struct ModelBundle {
  ModelDims dims;
  world::FeatureSchema schema;
  std::string concept_tag;  // empty until C and R' exist
  ad::ParamSet params;

  ad::NetworkSpec object_encoder() const;
  ad::NetworkSpec scene_encoder() const;
  ad::NetworkSpec pair_encoder() const;
  ad::NetworkSpec reward_head() const;
  ad::NetworkSpec concept_head() const;
  ad::NetworkSpec concept_reward_head() const;

  bool has_concepts() const { return !concept_tag.empty(); }
  cwnet::ConceptSchema concept_schema() const { return cwnet::ConceptSchema::by_tag(concept_tag); }
  /// Marks exactly the arrays under the given prefixes trainable.
  void set_trainable(const std::vector<std::string>& prefixes);
  std::uint64_t checksum(const std::vector<std::string>& prefixes) const;
};

/// Fresh H/E/R. The final reward layer starts at zero so the initial
/// candidate distribution is uniform.
ModelBundle make_bundle(std::uint64_t seed, const world::FeatureSchema& schema = {}, const ModelDims& dims = {});
/// Adds C and R' for `schema` (R' output layer starts at zero).
void attach_concept_heads(ModelBundle& bundle, const cwnet::ConceptSchema& schema, std::uint64_t seed);

// Bundle file: "cdrive-bundle 1" header line with dims, schema and concept
// tag, followed by a parameter checkpoint.
void save_bundle(const ModelBundle& bundle, const std::string& path);
ModelBundle load_bundle(const std::string& path);

// Forward pieces, recorded on a tape.
ad::Var scene_embedding(ad::Tape& tape, const ModelBundle& bundle, const SceneFeatures& features);
ad::Var pair_embeddings(ad::Tape& tape, const ModelBundle& bundle, ad::Var h, const std::vector<ad::Matrix>& sequence);
ad::Var rewards(ad::Tape& tape, const ModelBundle& bundle, ad::Var z);

}  // namespace cdrive::planner
