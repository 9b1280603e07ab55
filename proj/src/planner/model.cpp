#include "cdrive/planner/model.hpp"

#include <fstream>
#include <sstream>

namespace cdrive::planner {

using ad::Activation;
using ad::Dense;

ad::NetworkSpec ModelBundle::object_encoder() const {
  return {"H.obj", {Dense{kObjectFeatures, dims.object_hidden, Activation::relu},
                    Dense{dims.object_hidden, dims.object_hidden, Activation::relu}}};
}

ad::NetworkSpec ModelBundle::scene_encoder() const {
  return {"H.scene", {Dense{2 * dims.object_hidden + kEgoFeatures, dims.scene, Activation::tanh}}};
}

ad::NetworkSpec ModelBundle::pair_encoder() const {
  return {"E", {ad::Gru{kWaypointFeatures, dims.gru}, ad::Concat{dims.scene},
                Dense{dims.scene + dims.gru, dims.fuse, Activation::relu},
                Dense{dims.fuse, dims.z, Activation::tanh}}};
}

ad::NetworkSpec ModelBundle::reward_head() const {
  return {"R", {Dense{dims.z, dims.reward_hidden, Activation::relu}, Dense{dims.reward_hidden, 1, Activation::identity}}};
}

ad::NetworkSpec ModelBundle::concept_head() const {
  const int n = concept_schema().logit_count();
  return {"C", {Dense{dims.z, dims.concept_hidden, Activation::relu}, Dense{dims.concept_hidden, n, Activation::identity}}};
}

ad::NetworkSpec ModelBundle::concept_reward_head() const {
  const int n = concept_schema().logit_count();
  return {"Rp", {Dense{n, dims.concept_reward_hidden, Activation::relu},
                 Dense{dims.concept_reward_hidden, 1, Activation::identity}}};
}

namespace {

bool has_prefix(const std::string& name, const std::vector<std::string>& prefixes) {
  for (const auto& p : prefixes)
    if (name.rfind(p + ".", 0) == 0) return true;
  return false;
}

}  // namespace

void ModelBundle::set_trainable(const std::vector<std::string>& prefixes) {
  for (std::size_t i = 0; i < params.size(); ++i) params.set_trainable(i, has_prefix(params.entry(i).name, prefixes));
}

std::uint64_t ModelBundle::checksum(const std::vector<std::string>& prefixes) const {
  return params.checksum([&](const std::string& n) { return has_prefix(n, prefixes); });
}

ModelBundle make_bundle(std::uint64_t seed, const world::FeatureSchema& schema, const ModelDims& dims) {
  ModelBundle b;
  b.dims = dims;
  b.schema = schema;
  ad::init_params(b.object_encoder(), b.params, seed * 4 + 0);
  ad::init_params(b.scene_encoder(), b.params, seed * 4 + 1);
  ad::init_params(b.pair_encoder(), b.params, seed * 4 + 2);
  ad::init_params(b.reward_head(), b.params, seed * 4 + 3, true);
  return b;
}

void attach_concept_heads(ModelBundle& bundle, const cwnet::ConceptSchema& schema, std::uint64_t seed) {
  if (bundle.has_concepts()) throw std::invalid_argument("bundle already has concept heads");
  bundle.concept_tag = schema.tag;
  ad::init_params(bundle.concept_head(), bundle.params, seed * 2 + 101);
  ad::init_params(bundle.concept_reward_head(), bundle.params, seed * 2 + 102, true);
}

void save_bundle(const ModelBundle& b, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bundle " + path);
  out << "cdrive-bundle 1 dims=" << b.dims.object_hidden << ',' << b.dims.scene << ',' << b.dims.gru << ','
      << b.dims.fuse << ',' << b.dims.z << ',' << b.dims.reward_hidden << ',' << b.dims.concept_hidden << ','
      << b.dims.concept_reward_hidden << " categories=";
  for (int c = 0; c < world::kNumCategories; ++c) out << (b.schema.categories[c] ? '1' : '0');
  out << " concepts=" << (b.concept_tag.empty() ? "-" : b.concept_tag) << '\n';
  ad::write_params(out, b.params);
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bundle " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, dims, cats, concepts;
  int version = 0;
  if (!(hs >> magic >> version >> dims >> cats >> concepts) || magic != "cdrive-bundle")
    throw std::runtime_error("not a cdrive model bundle: " + path);
  if (version != 1) throw std::runtime_error("unsupported bundle version");
  ModelBundle b;
  auto value = [](const std::string& kv, const std::string& key) {
    if (kv.rfind(key + "=", 0) != 0) throw std::runtime_error("malformed bundle header field " + kv);
    return kv.substr(key.size() + 1);
  };
  std::istringstream ds(value(dims, "dims"));
  int* fields[] = {&b.dims.object_hidden, &b.dims.scene, &b.dims.gru, &b.dims.fuse,
                   &b.dims.z, &b.dims.reward_hidden, &b.dims.concept_hidden, &b.dims.concept_reward_hidden};
  for (int* f : fields) {
    char sep;
    if (!(ds >> *f)) throw std::runtime_error("malformed bundle dims");
    ds >> sep;
  }
  const std::string c = value(cats, "categories");
  if (c.size() != world::kNumCategories) throw std::runtime_error("malformed bundle categories");
  for (int i = 0; i < world::kNumCategories; ++i) b.schema.categories[i] = c[i] == '1';
  const std::string t = value(concepts, "concepts");
  b.concept_tag = t == "-" ? "" : t;
  b.params = ad::read_params(in);
  return b;
}

ad::Var scene_embedding(ad::Tape& tape, const ModelBundle& bundle, const SceneFeatures& features) {
  const ad::Var objects = tape.constant(features.objects);
  ad::Var pooled;
  if (features.objects.rows() == 0) {
    pooled = tape.constant(ad::Matrix::Zero(1, 2 * bundle.dims.object_hidden));
  } else {
    const ad::Var enc = ad::forward(tape, bundle.object_encoder(), bundle.params, objects);
    pooled = ad::concat_cols({ad::mean_rows(enc), ad::max_rows(enc)});
  }
  const ad::Var input = ad::concat_cols({pooled, tape.constant(features.ego)});
  return ad::forward(tape, bundle.scene_encoder(), bundle.params, input);
}

ad::Var pair_embeddings(ad::Tape& tape, const ModelBundle& bundle, ad::Var h, const std::vector<ad::Matrix>& sequence) {
  return ad::forward(tape, bundle.pair_encoder(), bundle.params, sequence, h);
}

ad::Var rewards(ad::Tape& tape, const ModelBundle& bundle, ad::Var z) {
  return ad::forward(tape, bundle.reward_head(), bundle.params, z);
}

}  // namespace cdrive::planner
