#include "cdrive/cwnet/cwnet.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include "cdrive/ad/focal.hpp"
#include "cdrive/kernels/batch.hpp"

namespace cdrive::cwnet {

using planner::ModelBundle;

ConceptVector activate(const ad::Matrix& logits, const ConceptSchema& schema) {
  ad::Tape t;
  return {logits, activate(t.constant(logits), schema).value()};
}

ad::Var activate(ad::Var logits, const ConceptSchema& schema) {
  if (logits.cols() != schema.logit_count())
    throw std::invalid_argument("concept logits have " + std::to_string(logits.cols()) + " columns, schema " +
                                schema.tag + " needs " + std::to_string(schema.logit_count()));
  ad::Var out = logits;
  for (std::size_t g = 0; g < schema.groups.size(); ++g)
    out = ad::softmax_cols(out, schema.group_start(static_cast<int>(g)),
                           static_cast<Eigen::Index>(schema.groups[g].members.size()));
  if (!schema.binaries.empty())
    out = ad::sigmoid_cols(out, schema.binary_start(), static_cast<Eigen::Index>(schema.binaries.size()));
  return out;
}

namespace {

void require_head(const ModelBundle& bundle, const ConceptSchema& schema) {
  if (!bundle.has_concepts()) throw std::invalid_argument("bundle has no concept head");
  if (bundle.concept_tag != schema.tag)
    throw std::invalid_argument("bundle concept head is for " + bundle.concept_tag + ", not " + schema.tag);
}

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

struct LossCore {
  double loss = 0.0;
  ad::Matrix grad;  // d loss / d logits
  std::map<std::string, double> per_concept;
};

LossCore concept_loss_core(const ad::Matrix& x, const ConceptLabels& labels, const ConceptSchema& schema,
                           double gamma) {
  const int k = static_cast<int>(x.rows());
  const int ng = static_cast<int>(schema.groups.size());
  const int nb = static_cast<int>(schema.binaries.size());
  if (x.cols() != schema.logit_count()) throw std::invalid_argument("concept logits do not match the schema width");
  if (labels.candidates != k || labels.groups != ng || labels.binaries != nb ||
      static_cast<int>(labels.group.size()) != k * ng || static_cast<int>(labels.binary.size()) != k * nb)
    throw std::invalid_argument("concept labels do not match the predictions");
  if (k == 0) throw std::invalid_argument("concept loss needs at least one candidate");

  LossCore out;
  out.grad = ad::Matrix::Zero(x.rows(), x.cols());
  const double wg = ng > 0 ? 0.5 / (k * ng) : 0.0;
  const double wb = nb > 0 ? 0.5 / (k * nb) : 0.0;
  for (int g = 0; g < ng; ++g) {
    const int s = schema.group_start(g);
    const int m = static_cast<int>(schema.groups[g].members.size());
    double term = 0.0;
    for (int i = 0; i < k; ++i) {
      const int y = labels.group_label(i, g);
      if (y < 0 || y >= m) throw std::invalid_argument("group label out of range");
      const auto row = x.row(i).segment(s, m);
      const double mx = row.maxCoeff();
      const double lse = mx + std::log((row.array() - mx).exp().sum());
      const ad::FocalTerm ft = ad::focal_from_logp(row(y) - lse, gamma);
      term += ft.loss;
      for (int j = 0; j < m; ++j)
        out.grad(i, s + j) = wg * ft.dloss_dlogp * ((j == y ? 1.0 : 0.0) - std::exp(row(j) - lse));
    }
    out.loss += wg * term;
    out.per_concept[schema.groups[g].name] = term / k;
  }
  const int bs = schema.binary_start();
  for (int b = 0; b < nb; ++b) {
    double term = 0.0;
    for (int i = 0; i < k; ++i) {
      const int y = labels.binary_label(i, b);
      if (y != 0 && y != 1) throw std::invalid_argument("binary label must be 0 or 1");
      const double z = x(i, bs + b);
      const double logp = log_sigmoid(y == 1 ? z : -z);
      const ad::FocalTerm ft = ad::focal_from_logp(logp, gamma);
      term += ft.loss;
      const double p = 1.0 / (1.0 + std::exp(-z));
      out.grad(i, bs + b) = wb * ft.dloss_dlogp * (y - p);
    }
    out.loss += wb * term;
    out.per_concept[schema.binaries[b]] = term / k;
  }
  return out;
}

}  // namespace

ConceptVector classify_concepts(const ModelBundle& bundle, const ad::Matrix& z, const ConceptSchema& schema) {
  require_head(bundle, schema);
  ad::Tape t;
  const ad::Var logits = ad::forward(t, bundle.concept_head(), bundle.params, t.constant(z));
  return {logits.value(), activate(logits, schema).value()};
}

FocalValue focal_scale(double p_t, double gamma) {
  if (!(p_t >= 0.0 && p_t <= 1.0)) throw std::invalid_argument("focal_scale: probability outside [0, 1]");
  if (gamma < 0.0) throw std::invalid_argument("focal_scale: gamma must be non-negative");
  FocalValue v;
  if (p_t == 0.0) {
    std::cerr << "warning: focal_scale clamped p_t = 0 to 1e-12\n";
    p_t = 1e-12;
    v.clamped = true;
  }
  v.factor = gamma == 0.0 ? 1.0 : std::pow(1.0 - p_t, gamma);
  v.loss = v.factor * -std::log(p_t);
  return v;
}

double concept_loss(const ad::Matrix& logits, const ConceptLabels& labels, const ConceptSchema& schema, double gamma,
                    std::map<std::string, double>* per_concept) {
  LossCore c = concept_loss_core(logits, labels, schema, gamma);
  if (per_concept) *per_concept = std::move(c.per_concept);
  return c.loss;
}

ad::Var concept_loss(ad::Var logits, const ConceptLabels& labels, const ConceptSchema& schema, double gamma) {
  LossCore c = concept_loss_core(logits.value(), labels, schema, gamma);
  ad::Matrix v(1, 1);
  v(0, 0) = c.loss;
  const int il = logits.id;
  return logits.tape->record(std::move(v), {il}, [il, g = std::move(c.grad)](ad::Tape& t, int self) {
    t.add_grad_expr(il, t.grad(self)(0, 0) * g);
  });
}

LossReport joint_loss(double concept_part, double trajectory_part) {
  if (!std::isfinite(concept_part) || !std::isfinite(trajectory_part))
    throw std::invalid_argument("joint_loss: parts must be finite");
  LossReport r;
  r.concept_loss = concept_part;
  r.trajectory_loss = trajectory_part;
  r.total = (concept_part + trajectory_part) / 2.0;
  return r;
}

Mode mode_from_string(const std::string& s) {
  if (s == "causal" || s == "cwnet_causal") return Mode::causal;
  if (s == "parallel" || s == "cwnet_parallel") return Mode::parallel;
  throw std::invalid_argument("unknown CW-Net mode '" + s + "'");
}

const char* to_string(Mode m) { return m == Mode::causal ? "causal" : "parallel"; }

namespace {

ConceptVector row_of(const ConceptVector& cv, int i) { return {cv.logits.row(i), cv.activations.row(i)}; }

}  // namespace

InterpretableRanking rank_interpretable(const ModelBundle& bundle, const world::SceneContext& scene,
                                        const std::vector<trajgen::Trajectory>& candidates) {
  const ConceptSchema schema = bundle.concept_schema();
  const ad::Matrix z = planner::embed_candidates(bundle, scene, candidates);
  InterpretableRanking out;
  out.concepts = classify_concepts(bundle, z, schema);
  ad::Tape t;
  const ad::Matrix r =
      ad::forward(t, bundle.concept_reward_head(), bundle.params, t.constant(out.concepts.logits)).value();
  out.ranking.rewards.assign(r.data(), r.data() + r.size());
  out.ranking.chosen_index = planner::argmax_lowest(out.ranking.rewards);
  out.ranking.chosen = candidates[out.ranking.chosen_index];
  out.chosen = row_of(out.concepts, out.ranking.chosen_index);
  return out;
}

InterpretableRanking select_trajectory_interpretable(const ModelBundle& bundle, const world::SceneContext& scene,
                                                     const trajgen::TrajGenParams& params) {
  return rank_interpretable(bundle, scene, trajgen::generate_candidates(scene, params).candidates);
}

InterpretableRanking rank_parallel(const ModelBundle& bundle, const world::SceneContext& scene,
                                   const std::vector<trajgen::Trajectory>& candidates) {
  const ConceptSchema schema = bundle.concept_schema();
  const ad::Matrix z = planner::embed_candidates(bundle, scene, candidates);
  InterpretableRanking out;
  out.concepts = classify_concepts(bundle, z, schema);
  ad::Tape t;
  const ad::Matrix r = planner::rewards(t, bundle, t.constant(z)).value();
  out.ranking.rewards.assign(r.data(), r.data() + r.size());
  out.ranking.chosen_index = planner::argmax_lowest(out.ranking.rewards);
  out.ranking.chosen = candidates[out.ranking.chosen_index];
  out.chosen = row_of(out.concepts, out.ranking.chosen_index);
  return out;
}

std::vector<ad::Matrix> cache_embeddings(const ModelBundle& bundle,
                                         const std::vector<const data::DatasetRecord*>& records, bool parallel) {
  return kernels::map_items<ad::Matrix>(
      static_cast<int>(records.size()),
      [&](int i) {
        const auto& r = *records[i];
        return planner::embed_candidates(bundle, planner::planner_view(r.scene, bundle.schema),
                                         r.candidates.candidates);
      },
      parallel);
}

namespace {

std::vector<std::string> trainable_prefixes(Mode mode) {
  return mode == Mode::causal ? std::vector<std::string>{"C", "Rp"} : std::vector<std::string>{"C"};
}

std::uint64_t frozen_checksum(const ModelBundle& b, Mode mode) {
  const auto train = trainable_prefixes(mode);
  return b.params.checksum([&](const std::string& n) {
    for (const auto& p : train)
      if (n.rfind(p + ".", 0) == 0) return false;
    return true;
  });
}

}  // namespace

planner::ModelBundle train_cwnet(const ModelBundle& blackbox, const std::vector<const data::DatasetRecord*>& records,
                                 const ConceptSchema& schema, Mode mode, const CwTrainConfig& cfg,
                                 CwTrainReport* report, const std::function<void(int, const LossReport&)>& progress) {
  if (records.empty()) throw std::invalid_argument("train_cwnet: empty dataset");
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw std::invalid_argument("train_cwnet: bad batch size or epochs");
  ModelBundle bundle = blackbox;
  if (!bundle.has_concepts()) attach_concept_heads(bundle, schema, cfg.seed);
  require_head(bundle, schema);
  bundle.set_trainable(trainable_prefixes(mode));

  const int n = static_cast<int>(records.size());
  std::vector<const ConceptLabels*> labels(n);
  std::vector<int> choice(n, -1);
  for (int i = 0; i < n; ++i) {
    labels[i] = &records[i]->labels_for(schema.tag);
    if (labels[i]->candidates != static_cast<int>(records[i]->candidates.size()))
      throw std::invalid_argument("train_cwnet: label count differs from candidate count");
    if (mode == Mode::causal) {
      if (!records[i]->blackbox_choice) throw std::invalid_argument("train_cwnet: record without a black-box choice");
      choice[i] = *records[i]->blackbox_choice;
    }
  }

  CwTrainReport local;
  CwTrainReport& rep = report ? *report : local;
  rep.frozen_checksum_before = frozen_checksum(bundle, mode);

  const std::vector<ad::Matrix> z = cache_embeddings(bundle, records, cfg.parallel);
  std::vector<ad::Matrix> soft(n);
  if (mode == Mode::causal && cfg.soft_labels) {
    soft = kernels::map_items<ad::Matrix>(
        n,
        [&](int i) {
          ad::Tape t;
          const ad::Matrix r = planner::rewards(t, bundle, t.constant(z[i])).value();
          const ad::Matrix e = (r.array() - r.maxCoeff()).exp().matrix();
          return ad::Matrix(e / e.sum());
        },
        cfg.parallel);
  }

  ad::AdamState state;
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum_c = 0.0, sum_t = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n - start);
      std::vector<double> lc(count, 0.0), lt(count, 0.0);
      kernels::ItemGradient g = kernels::sum_gradients(
          count,
          [&](int j) {
            const int i = order[start + j];
            ad::Tape t;
            const ad::Var logits = ad::forward(t, bundle.concept_head(), bundle.params, t.constant(z[i]));
            const ad::Var c = concept_loss(logits, *labels[i], schema, cfg.concept_gamma);
            ad::Var total = c;
            if (mode == Mode::causal) {
              const ad::Var r = ad::forward(t, bundle.concept_reward_head(), bundle.params, logits);
              const ad::Var tr = cfg.soft_labels ? ad::softmax_cross_entropy_soft(r, soft[i])
                                                 : ad::softmax_cross_entropy(r, choice[i], cfg.trajectory_gamma);
              total = ad::scale(ad::add(c, tr), 0.5);
              lt[j] = tr.value()(0, 0);
            }
            lc[j] = c.value()(0, 0);
            t.backward(total);
            return kernels::ItemGradient{total.value()(0, 0), t.param_gradients()};
          },
          cfg.parallel);
      if (!std::isfinite(g.loss)) throw ad::DivergenceError("non-finite loss in epoch " + std::to_string(epoch));
      for (auto& [name, m] : g.grads) m /= count;
      ad::adam_step(bundle.params, g.grads, state, cfg.adam);
      for (int j = 0; j < count; ++j) {
        sum_c += lc[j];
        sum_t += lt[j];
      }
      ++rep.steps;
    }
    LossReport lr = mode == Mode::causal ? joint_loss(sum_c / n, sum_t / n) : LossReport{sum_c / n, 0.0, sum_c / n, {}};
    rep.epochs.push_back(lr);
    if (progress) progress(epoch, lr);
  }

  rep.frozen_checksum_after = frozen_checksum(bundle, mode);
  if (rep.frozen_checksum_after != rep.frozen_checksum_before)
    throw std::logic_error("train_cwnet modified frozen parameters");
  return bundle;
}

std::vector<int> interpretable_choices(const ModelBundle& bundle, const std::vector<ad::Matrix>& z, bool parallel) {
  const ConceptSchema schema = bundle.concept_schema();
  return kernels::map_items<int>(
      static_cast<int>(z.size()),
      [&](int i) {
        ad::Tape t;
        const ad::Var logits = ad::forward(t, bundle.concept_head(), bundle.params, t.constant(z[i]));
        const ad::Matrix r = ad::forward(t, bundle.concept_reward_head(), bundle.params, logits).value();
        return planner::argmax_lowest(std::vector<double>(r.data(), r.data() + r.size()));
      },
      parallel);
}

int to_percentage(double activation) { return static_cast<int>(std::round(activation * 100.0)); }

Explanation render_explanation(const ad::Matrix& activations, const planner::Ranking& ranking,
                               const ConceptSchema& schema, double current_speed) {
  Explanation e;
  e.names = schema.names();
  if (activations.size() != static_cast<Eigen::Index>(e.names.size()))
    throw std::invalid_argument("render_explanation: activation width does not match the schema");
  for (Eigen::Index j = 0; j < activations.size(); ++j) e.percentages.push_back(to_percentage(activations.data()[j]));

  // kinematic concepts restate the action, so scene concepts explain it when active
  static const std::vector<std::string> kinematic{"LEFT", "RIGHT", "STRAIGHT", "STOPPED", "SLOW", "FAST"};
  auto is_kinematic = [&](const std::string& n) {
    return std::find(kinematic.begin(), kinematic.end(), n) != kinematic.end();
  };
  int best = -1;
  for (int j = 0; j < static_cast<int>(e.names.size()); ++j) {
    if (is_kinematic(e.names[j]) || activations.data()[j] < 0.5) continue;
    if (best < 0 || activations.data()[j] > activations.data()[best]) best = j;
  }
  if (best < 0) {
    best = 0;
    for (int j = 1; j < static_cast<int>(e.names.size()); ++j)
      if (activations.data()[j] > activations.data()[best]) best = j;
  }
  e.top_concept = e.names[best];

  const double end_speed = ranking.chosen.waypoints.empty() ? current_speed : ranking.chosen.waypoints.back().speed;
  if (end_speed < 0.1)
    e.action = "stop";
  else if (end_speed < current_speed - 0.5)
    e.action = "slow down";
  else
    e.action = "proceed";
  e.sentence = "I chose to " + e.action + " based on recognizing that " + concept_description(e.top_concept) + ".";
  return e;
}

}  // namespace cdrive::cwnet
